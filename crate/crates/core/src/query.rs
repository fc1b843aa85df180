//! Conjunctive query evaluation, query classes relative to an MD set, and
//! resolved answers: answers true in every minimally resolved instance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chase::{Chase, ChaseConfig, Exploration, Goal};
use crate::instance::{Facts, Instance};
use crate::model::{ConjunctiveQuery, MdSet, Term};
use crate::{Error, Result};

/// Answers of `q` over `db` as head tuples.
pub fn evaluate(q: &ConjunctiveQuery, db: &dyn Facts) -> Result<BTreeSet<Vec<String>>> {
    let atoms = resolve_atoms(q, db)?;
    let mut out = BTreeSet::new();
    let mut binding: BTreeMap<&str, &str> = BTreeMap::new();
    search(&atoms, 0, db, &mut binding, &mut |b| {
        out.insert(q.head.iter().map(|v| b[v.as_str()].to_string()).collect());
        true
    });
    Ok(out)
}

/// Whether `candidate` (one value per head variable) is an answer of `q`.
pub fn holds(q: &ConjunctiveQuery, db: &dyn Facts, candidate: &[String]) -> Result<bool> {
    if candidate.len() != q.head.len() {
        return Err(Error::InvalidQuery(alloc::format!(
            "candidate has {} values, the head has {}",
            candidate.len(),
            q.head.len()
        )));
    }
    let atoms = resolve_atoms(q, db)?;
    let mut binding: BTreeMap<&str, &str> = BTreeMap::new();
    for (v, c) in q.head.iter().zip(candidate) {
        if let Some(prev) = binding.insert(v.as_str(), c.as_str()) {
            if prev != c {
                return Ok(false);
            }
        }
    }
    let mut found = false;
    search(&atoms, 0, db, &mut binding, &mut |_| {
        found = true;
        false
    });
    Ok(found)
}

fn resolve_atoms<'q>(q: &'q ConjunctiveQuery, db: &dyn Facts) -> Result<Vec<(usize, &'q [Term])>> {
    q.body
        .iter()
        .map(|a| {
            let r = db.schema().relation_index(&a.relation).ok_or_else(|| Error::UnknownRelation(a.relation.clone()))?;
            let arity = db.schema().relations()[r].arity();
            if arity != a.terms.len() {
                return Err(Error::ArityMismatch { relation: a.relation.clone(), expected: arity, found: a.terms.len() });
            }
            Ok((r, a.terms.as_slice()))
        })
        .collect()
}

/// Backtracking nested-loop join. `emit` returns false to stop.
fn search<'a>(
    atoms: &[(usize, &'a [Term])],
    i: usize,
    db: &'a dyn Facts,
    binding: &mut BTreeMap<&'a str, &'a str>,
    emit: &mut dyn FnMut(&BTreeMap<&'a str, &'a str>) -> bool,
) -> bool {
    if i == atoms.len() {
        return emit(binding);
    }
    let (rel, terms) = atoms[i];
    for row in 0..db.row_count(rel) {
        let mut bound: Vec<&str> = Vec::new();
        let mut ok = true;
        for (a, t) in terms.iter().enumerate() {
            let v = db.value(rel, row, a);
            match t {
                Term::Const(c) => ok = c == v,
                Term::Var(x) => match binding.get(x.as_str()) {
                    Some(&b) => ok = b == v,
                    None => {
                        binding.insert(x.as_str(), v);
                        bound.push(x.as_str());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        let go_on = !ok || search(atoms, i + 1, db, binding, emit);
        for x in bound {
            binding.remove(x);
        }
        if !go_on {
            return false;
        }
    }
    true
}

/// Membership of a query in the classes defined relative to an MD set.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryClassReport {
    pub is_ujcq: bool,
    pub is_chaq: bool,
    /// The offending join variable when not UJCQ, or the index of a
    /// join-restricted free occurrence when CHAQ.
    pub witness: Option<String>,
    /// UJCQ, not CHAQ, yet some atom over an MD predicate has a free
    /// variable occurring in no other such atom.
    pub near_miss: bool,
}

/// UJCQ: no existential variable joins (occurs twice) while occupying a
/// changeable attribute at any of its occurrences. CHAQ: UJCQ with an atom
/// over a predicate of `m` whose variables are all free and occur in no
/// other atom over a predicate of `m`.
pub fn classify_query(q: &ConjunctiveQuery, m: &MdSet) -> QueryClassReport {
    let changeable = m.changeable();
    let schema = m.schema();
    let occurrences = q.occurrences();
    let existential = q.existential();
    let mut bad_join = None;
    'vars: for v in &existential {
        if occurrences.get(v.as_str()).copied().unwrap_or(0) < 2 {
            continue;
        }
        for atom in &q.body {
            let Some(rel) = schema.relation(&atom.relation) else { continue };
            for (t, attr) in atom.terms.iter().zip(&rel.attributes) {
                if *t == Term::Var(v.clone()) && changeable.contains(&crate::AttrRef::new(&rel.name, &attr.name)) {
                    bad_join = Some(v.clone());
                    break 'vars;
                }
            }
        }
    }
    if let Some(v) = bad_join {
        return QueryClassReport { is_ujcq: false, is_chaq: false, witness: Some(v), near_miss: false };
    }

    let md_preds = m.relations();
    let in_m: Vec<usize> = (0..q.body.len()).filter(|&i| md_preds.contains(q.body[i].relation.as_str())).collect();
    let vars_of = |i: usize| -> BTreeSet<&str> {
        q.body[i].terms.iter().filter_map(|t| if let Term::Var(v) = t { Some(v.as_str()) } else { None }).collect()
    };
    let mut near_miss = false;
    for &i in &in_m {
        let others: BTreeSet<&str> = in_m.iter().filter(|&&j| j != i).flat_map(|&j| vars_of(j)).collect();
        let restricted: Vec<&str> =
            vars_of(i).into_iter().filter(|v| q.head.iter().any(|h| h == v) && !others.contains(v)).collect();
        if restricted.len() == vars_of(i).len() {
            return QueryClassReport {
                is_ujcq: true,
                is_chaq: true,
                witness: Some(alloc::format!("atom {} ({})", i, q.body[i].relation)),
                near_miss: false,
            };
        }
        near_miss |= !restricted.is_empty();
    }
    QueryClassReport { is_ujcq: true, is_chaq: false, witness: None, near_miss }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnswerSet {
    pub answers: BTreeSet<Vec<String>>,
    pub mri_count: usize,
    pub min_changes: usize,
}

/// Answers true in every minimally resolved instance of `d`. Uses the
/// level-wise route when it applies.
pub fn resolved_answers(q: &ConjunctiveQuery, d: &Instance, m: &MdSet, config: ChaseConfig) -> Result<AnswerSet> {
    let chase = Chase::new(d, m, config)?;
    let res = if crate::classify::prop1_fastpath_applicable(m) { chase.minimal_by_levels()? } else { chase.minimal()? };
    complete(&res.stats)?;
    let mut answers: Option<BTreeSet<Vec<String>>> = None;
    for mri in &res.instances {
        let a = evaluate(q, mri)?;
        answers = Some(match answers {
            None => a,
            Some(prev) => prev.intersection(&a).cloned().collect(),
        });
    }
    Ok(AnswerSet {
        answers: answers.unwrap_or_default(),
        mri_count: res.instances.len(),
        min_changes: res.min_changes.unwrap_or(0),
    })
}

/// A branch cut by the step budget may hide a cheaper resolved instance, so
/// answers from a truncated search are refused.
fn complete(stats: &Exploration) -> Result<()> {
    if stats.truncated {
        return Err(Error::BudgetExhausted("a chase branch exceeded the step budget".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Membership {
    pub member: bool,
    pub min_changes: usize,
}

/// Whether `candidate` is an answer in every minimally resolved instance.
/// Searches for a minimally resolved instance refuting it, without
/// enumerating all of them.
pub fn is_resolved_answer(
    q: &ConjunctiveQuery,
    d: &Instance,
    m: &MdSet,
    candidate: &[String],
    config: ChaseConfig,
) -> Result<Membership> {
    // Validates arity and relations once, up front.
    holds(q, d, candidate)?;
    let chase = Chase::new(d, m, config)?;
    let check = |db: &dyn Facts| holds(q, db, candidate).unwrap_or(false);
    let view_check = |v: &crate::chase::StateView<'_>| check(v);
    let (best, goal, stats) = chase.minimize(Goal::Refute(&view_check, false))?;
    complete(&stats)?;
    let Goal::Refute(_, refuted) = goal else { unreachable!() };
    Ok(Membership { member: !refuted, min_changes: best })
}
