//! Schemas, matching dependencies and conjunctive queries.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::similarity::{Registry, Similarity};
use crate::{Error, Result};

pub const DEFAULT_DOMAIN: &str = "string";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attribute {
    pub name: String,
    pub domain: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Relation {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn index_of(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == attribute)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schema {
    relations: Vec<Relation>,
}

impl Schema {
    pub fn new(relations: Vec<Relation>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for r in &relations {
            if !names.insert(r.name.as_str()) {
                return Err(Error::Duplicate { what: "relation", name: r.name.clone() });
            }
            let mut attrs = BTreeSet::new();
            for a in &r.attributes {
                if !attrs.insert(a.name.as_str()) {
                    return Err(Error::Duplicate {
                        what: "attribute",
                        name: alloc::format!("{}[{}]", r.name, a.name),
                    });
                }
            }
        }
        Ok(Schema { relations })
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn attribute(&self, relation: &str, attribute: &str) -> Result<&Attribute> {
        let rel = self
            .relation(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.to_owned()))?;
        rel.attributes
            .iter()
            .find(|a| a.name == attribute)
            .ok_or_else(|| Error::UnknownAttribute {
                relation: relation.to_owned(),
                attribute: attribute.to_owned(),
            })
    }

    /// Every attribute of the schema as an unlabeled reference.
    pub fn all_attributes(&self) -> Vec<AttrRef> {
        self.relations
            .iter()
            .flat_map(|r| r.attributes.iter().map(move |a| AttrRef::new(&r.name, &a.name)))
            .collect()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.relations {
            write!(f, "{}(", r.name)?;
            for (i, a) in r.attributes.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(&a.name)?;
                if a.domain != DEFAULT_DOMAIN {
                    write!(f, ":{}", a.domain)?;
                }
            }
            f.write_str(")\n")?;
        }
        Ok(())
    }
}

/// Occurrence label used when a single relation plays both roles of a pair:
/// `md` is 1 or 2 (which MD), `side` is 1 or 2 (left or right occurrence).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Label {
    pub md: u8,
    pub side: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttrRef {
    pub relation: String,
    pub attribute: String,
    pub label: Option<Label>,
}

impl AttrRef {
    pub fn new(relation: &str, attribute: &str) -> Self {
        AttrRef { relation: relation.to_owned(), attribute: attribute.to_owned(), label: None }
    }

    pub fn labeled(&self, md: u8, side: u8) -> Self {
        AttrRef { label: Some(Label { md, side }), ..self.clone() }
    }

    pub fn unlabeled(&self) -> Self {
        AttrRef { label: None, ..self.clone() }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            None => write!(f, "{}[{}]", self.relation, self.attribute),
            Some(l) => write!(f, "{}_{}^{}[{}]", self.relation, l.md, l.side, self.attribute),
        }
    }
}

/// `left ~op right`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimAtom {
    pub left: AttrRef,
    pub right: AttrRef,
    pub op: String,
}

/// `left := right`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchAtom {
    pub left: AttrRef,
    pub right: AttrRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Md {
    pub name: Option<String>,
    pub lhs: Vec<SimAtom>,
    pub rhs: Vec<MatchAtom>,
}

impl Md {
    /// Relation on the left of every atom.
    pub fn left_relation(&self) -> &str {
        &self.lhs[0].left.relation
    }

    /// Relation on the right of every atom.
    pub fn right_relation(&self) -> &str {
        &self.lhs[0].right.relation
    }

    pub fn is_single_predicate(&self) -> bool {
        self.left_relation() == self.right_relation()
    }

    pub fn lhs_attrs(&self) -> BTreeSet<AttrRef> {
        self.lhs.iter().flat_map(|a| [a.left.clone(), a.right.clone()]).collect()
    }

    pub fn rhs_attrs(&self) -> BTreeSet<AttrRef> {
        self.rhs.iter().flat_map(|a| [a.left.clone(), a.right.clone()]).collect()
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.lhs
            .iter()
            .flat_map(|a| [a.left.relation.as_str(), a.right.relation.as_str()])
            .chain(self.rhs.iter().flat_map(|a| [a.left.relation.as_str(), a.right.relation.as_str()]))
            .collect()
    }

    /// The same MD with occurrence labels removed.
    pub fn unlabeled(&self) -> Md {
        Md {
            name: self.name.clone(),
            lhs: self
                .lhs
                .iter()
                .map(|a| SimAtom { left: a.left.unlabeled(), right: a.right.unlabeled(), op: a.op.clone() })
                .collect(),
            rhs: self
                .rhs
                .iter()
                .map(|a| MatchAtom { left: a.left.unlabeled(), right: a.right.unlabeled() })
                .collect(),
        }
    }
}

impl fmt::Display for Md {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            write!(f, "{n}: ")?;
        }
        for (i, a) in self.lhs.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{} ~{} {}", a.left, a.op, a.right)?;
        }
        f.write_str(" -> ")?;
        for (i, a) in self.rhs.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{} := {}", a.left, a.right)?;
        }
        Ok(())
    }
}

/// An ordered, validated set of MDs over a schema.
#[derive(Clone, Debug)]
pub struct MdSet {
    schema: Schema,
    mds: Vec<Md>,
    registry: Registry,
    ops: BTreeMap<String, Arc<dyn Similarity>>,
}

impl PartialEq for MdSet {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.mds == other.mds
    }
}

impl MdSet {
    /// Validates `mds` against `schema` and resolves operator names.
    pub fn new(schema: Schema, mds: Vec<Md>, registry: Registry) -> Result<Self> {
        if mds.is_empty() {
            return Err(Error::EmptyRuleSet);
        }
        let mut ops = BTreeMap::new();
        let mut domain_op: BTreeMap<String, String> = BTreeMap::new();
        let mut mds = mds;
        for md in &mut mds {
            if md.lhs.is_empty() || md.rhs.is_empty() {
                return Err(Error::InvalidMd(alloc::format!("both sides must be non-empty in `{md}`")));
            }
            normalize_orientation(md)?;
            for (l, r, op) in md
                .lhs
                .iter()
                .map(|a| (&a.left, &a.right, Some(&a.op)))
                .chain(md.rhs.iter().map(|a| (&a.left, &a.right, None)))
            {
                let dl = &schema.attribute(&l.relation, &l.attribute)?.domain;
                let dr = &schema.attribute(&r.relation, &r.attribute)?.domain;
                if dl != dr {
                    return Err(Error::DomainMismatch {
                        left: l.to_string_lossy(),
                        left_domain: dl.clone(),
                        right: r.to_string_lossy(),
                        right_domain: dr.clone(),
                    });
                }
                if let Some(op) = op {
                    let sim = registry.get(op).ok_or_else(|| Error::UnknownOperator(op.clone()))?;
                    ops.insert(op.clone(), sim);
                    match domain_op.get(dl) {
                        Some(prev) if prev != op => {
                            return Err(Error::OperatorConflict {
                                domain: dl.clone(),
                                first: prev.clone(),
                                second: op.clone(),
                            })
                        }
                        _ => {
                            domain_op.insert(dl.clone(), op.clone());
                        }
                    }
                }
            }
        }
        Ok(MdSet { schema, mds, registry, ops })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn mds(&self) -> &[Md] {
        &self.mds
    }

    pub fn len(&self) -> usize {
        self.mds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mds.is_empty()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// The operator named in some atom of this set.
    pub fn op(&self, name: &str) -> Option<&Arc<dyn Similarity>> {
        self.ops.get(name)
    }

    /// Operators used by the set, by name.
    pub fn operators(&self) -> impl Iterator<Item = &Arc<dyn Similarity>> {
        self.ops.values()
    }

    /// The operator attached to a domain, `eq` when no atom compares it.
    pub fn op_for_domain(&self, domain: &str) -> Arc<dyn Similarity> {
        for md in &self.mds {
            for a in &md.lhs {
                if let Ok(attr) = self.schema.attribute(&a.left.relation, &a.left.attribute) {
                    if attr.domain == domain {
                        return self.ops[&a.op].clone();
                    }
                }
            }
        }
        Arc::new(crate::similarity::Equality)
    }

    /// Relation names occurring in the MDs, sorted.
    pub fn relations(&self) -> BTreeSet<&str> {
        self.mds.iter().flat_map(|m| m.relations()).collect()
    }

    /// Attributes occurring on the right of some MD (changeable attributes).
    pub fn changeable(&self) -> BTreeSet<AttrRef> {
        self.mds.iter().flat_map(|m| m.rhs_attrs()).map(|a| a.unlabeled()).collect()
    }

    /// A new set with different MDs over the same schema and registry.
    pub fn with_mds(&self, mds: Vec<Md>) -> Result<MdSet> {
        MdSet::new(self.schema.clone(), mds, self.registry.clone())
    }
}

impl AttrRef {
    fn to_string_lossy(&self) -> String {
        alloc::format!("{self}")
    }
}

/// Swaps atoms written against the MD's orientation (`S[x] ~ R[y]` in an MD
/// whose first atom reads `R[..] ~ S[..]`), rejecting MDs over more than two
/// relations.
fn normalize_orientation(md: &mut Md) -> Result<()> {
    let l = md.lhs[0].left.relation.clone();
    let r = md.lhs[0].right.relation.clone();
    let fix = |left: &mut AttrRef, right: &mut AttrRef| -> Result<()> {
        if left.relation == l && right.relation == r {
            Ok(())
        } else if left.relation == r && right.relation == l {
            core::mem::swap(left, right);
            Ok(())
        } else {
            Err(Error::InvalidMd(alloc::format!(
                "atom {left} / {right} does not relate {l} and {r}"
            )))
        }
    };
    for a in &mut md.lhs {
        fix(&mut a.left, &mut a.right)?;
    }
    for a in &mut md.rhs {
        fix(&mut a.left, &mut a.right)?;
    }
    Ok(())
}

impl fmt::Display for MdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mds {
            writeln!(f, "{m}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryAtom {
    pub relation: String,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjunctiveQuery {
    pub name: String,
    pub head: Vec<String>,
    pub body: Vec<QueryAtom>,
}

impl ConjunctiveQuery {
    /// Body variables not in the head, in order of first occurrence.
    pub fn existential(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in self.body.iter().flat_map(|a| &a.terms) {
            if let Term::Var(v) = t {
                if !self.head.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Occurrence count of every variable in the body.
    pub fn occurrences(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for t in self.body.iter().flat_map(|a| &a.terms) {
            if let Term::Var(v) = t {
                *out.entry(v.as_str()).or_insert(0) += 1;
            }
        }
        out
    }
}

fn write_constant(f: &mut fmt::Formatter<'_>, c: &str) -> fmt::Result {
    f.write_str("\"")?;
    for ch in c.chars() {
        match ch {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            _ => write!(f, "{ch}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- ", self.name, self.head.join(", "))?;
        let ex = self.existential();
        if !ex.is_empty() {
            write!(f, "exists {}. ", ex.join(", "))?;
        }
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}(", a.relation)?;
            for (j, t) in a.terms.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                match t {
                    Term::Var(v) => f.write_str(v)?,
                    Term::Const(c) => write_constant(f, c)?,
                }
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}
