//! Text formats: schemas, MD rule files and conjunctive queries.
//!
//! ```text
//! R(A, B, C:bits)                                 # schema line
//! m1: R[A] ~eq S[B] & R[C] ~lev2 S[D] -> R[E] := S[F]
//! Q(x, z) :- exists y. R(x, y, z), S(x, "c", w)
//! ```

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{
    AttrRef, Attribute, ConjunctiveQuery, MatchAtom, Md, MdSet, QueryAtom, Relation, Schema,
    SimAtom, Term, DEFAULT_DOMAIN,
};
use crate::similarity::Registry;
use crate::{Error, Result};

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, line, col: 1, _src: src }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { line: self.line, column: self.col, message: message.into() })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.peek().is_none()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars[self.pos..].iter().take(n).copied().eq(s.chars()) {
            for _ in 0..n {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_owned(), |c| alloc::format!("`{c}`"));
            self.err(alloc::format!("expected `{s}`, found {found}"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => {}
            _ => return self.err("expected identifier"),
        }
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '\'' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(s)
    }
}

/// Parses a schema: one `Rel(Attr, Attr:domain, ...)` per line.
pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut cur = Cursor::new(text, 1);
    let mut relations = Vec::new();
    while !cur.at_end() {
        let name = cur.ident()?;
        cur.expect("(")?;
        let mut attributes = Vec::new();
        if !cur.eat(")") {
            loop {
                let a = cur.ident()?;
                let domain = if cur.eat(":") { cur.ident()? } else { DEFAULT_DOMAIN.to_owned() };
                attributes.push(Attribute { name: a, domain });
                if cur.eat(")") {
                    break;
                }
                cur.expect(",")?;
            }
        }
        relations.push(Relation { name, attributes });
    }
    Schema::new(relations)
}

fn attr_ref(cur: &mut Cursor<'_>, schema: &Schema) -> Result<AttrRef> {
    let (line, col) = (cur.line, cur.col);
    let rel = cur.ident()?;
    cur.expect("[")?;
    let attr = cur.ident()?;
    cur.expect("]")?;
    schema.attribute(&rel, &attr).map_err(|e| match e {
        Error::UnknownRelation(_) | Error::UnknownAttribute { .. } => Error::Syntax {
            line,
            column: col,
            message: alloc::format!("{e}"),
        },
        other => other,
    })?;
    Ok(AttrRef::new(&rel, &attr))
}

fn operator(cur: &mut Cursor<'_>) -> Result<String> {
    cur.expect("~")?;
    let mut op = String::new();
    while let Some(c) = cur.peek() {
        if c.is_ascii_alphanumeric() || c == '_' {
            op.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    if op.is_empty() {
        op.push_str("eq");
    }
    Ok(op)
}

fn md_line(cur: &mut Cursor<'_>, schema: &Schema) -> Result<Md> {
    cur.skip_ws();
    let save = (cur.pos, cur.line, cur.col);
    let mut name = None;
    if let Ok(id) = cur.ident() {
        cur.skip_ws();
        if cur.peek() == Some(':') && cur.peek2() != Some('=') {
            cur.bump();
            name = Some(id);
        } else {
            (cur.pos, cur.line, cur.col) = save;
        }
    }
    let mut lhs = Vec::new();
    loop {
        let left = attr_ref(cur, schema)?;
        let op = operator(cur)?;
        let right = attr_ref(cur, schema)?;
        lhs.push(SimAtom { left, right, op });
        if !cur.eat("&") {
            break;
        }
    }
    cur.expect("->")?;
    let mut rhs = Vec::new();
    loop {
        let left = attr_ref(cur, schema)?;
        cur.expect(":=")?;
        let right = attr_ref(cur, schema)?;
        rhs.push(MatchAtom { left, right });
        if !cur.eat("&") {
            break;
        }
    }
    Ok(Md { name, lhs, rhs })
}

/// Parses an MD rule file: one rule per line, `#` starts a comment.
pub fn parse_mds(text: &str, schema: &Schema) -> Result<MdSet> {
    parse_mds_with(text, schema, Registry::builtin())
}

pub fn parse_mds_with(text: &str, schema: &Schema, registry: Registry) -> Result<MdSet> {
    let mut mds = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut cur = Cursor::new(line, i + 1);
        if cur.at_end() {
            continue;
        }
        mds.push(md_line(&mut cur, schema)?);
        if !cur.at_end() {
            return cur.err("unexpected trailing input");
        }
    }
    MdSet::new(schema.clone(), mds, registry)
}

fn term(cur: &mut Cursor<'_>) -> Result<Term> {
    cur.skip_ws();
    match cur.peek() {
        Some('"') => {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some(c) => s.push(c),
                        None => return cur.err("unterminated string"),
                    },
                    Some(c) => s.push(c),
                    None => return cur.err("unterminated string"),
                }
            }
            Ok(Term::Const(s))
        }
        Some(c) if c.is_ascii_digit() || c == '-' => {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() || c == '-' || c == '.' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Ok(Term::Const(s))
        }
        _ => Ok(Term::Var(cur.ident()?)),
    }
}

/// Parses `Q(x, z) :- exists y. R(x, y, z), ...`. When an `exists` clause
/// is present it must list exactly the body variables missing from the head.
pub fn parse_query(text: &str, schema: &Schema) -> Result<ConjunctiveQuery> {
    let mut cur = Cursor::new(text, 1);
    let name = cur.ident()?;
    cur.expect("(")?;
    let mut head = Vec::new();
    if !cur.eat(")") {
        loop {
            head.push(cur.ident()?);
            if cur.eat(")") {
                break;
            }
            cur.expect(",")?;
        }
    }
    cur.expect(":-")?;
    let mut declared: Option<Vec<String>> = None;
    cur.skip_ws();
    let save = (cur.pos, cur.line, cur.col);
    if cur.ident().ok().as_deref() == Some("exists") && !cur.eat("(") {
        let mut vars = Vec::new();
        loop {
            vars.push(cur.ident()?);
            if cur.eat(".") {
                break;
            }
            cur.expect(",")?;
        }
        declared = Some(vars);
    } else {
        (cur.pos, cur.line, cur.col) = save;
    }
    let mut body = Vec::new();
    loop {
        let (line, column) = (cur.line, cur.col);
        let relation = cur.ident()?;
        cur.expect("(")?;
        let mut terms = Vec::new();
        if !cur.eat(")") {
            loop {
                terms.push(term(&mut cur)?);
                if cur.eat(")") {
                    break;
                }
                cur.expect(",")?;
            }
        }
        let rel = schema.relation(&relation).ok_or_else(|| Error::Syntax {
            line,
            column,
            message: alloc::format!("unknown relation `{relation}`"),
        })?;
        if rel.arity() != terms.len() {
            return Err(Error::ArityMismatch { relation, expected: rel.arity(), found: terms.len() });
        }
        body.push(QueryAtom { relation, terms });
        if !(cur.eat(",") || cur.eat("&")) {
            break;
        }
    }
    if !cur.at_end() {
        return cur.err("unexpected trailing input");
    }
    let q = ConjunctiveQuery { name, head, body };
    validate_query(&q, declared.as_deref())?;
    Ok(q)
}

fn validate_query(q: &ConjunctiveQuery, declared: Option<&[String]>) -> Result<()> {
    let occ = q.occurrences();
    let mut seen = BTreeSet::new();
    for v in &q.head {
        if !seen.insert(v.as_str()) {
            return Err(Error::InvalidQuery(alloc::format!("head variable `{v}` repeated")));
        }
        if !occ.contains_key(v.as_str()) {
            return Err(Error::InvalidQuery(alloc::format!("head variable `{v}` not in body")));
        }
    }
    if let Some(declared) = declared {
        let want: BTreeSet<String> = q.existential().into_iter().collect();
        let got: BTreeSet<String> = declared.iter().cloned().collect();
        if want != got || got.len() != declared.len() {
            return Err(Error::InvalidQuery(
                "exists clause must list exactly the non-head body variables".to_owned(),
            ));
        }
    }
    Ok(())
}
