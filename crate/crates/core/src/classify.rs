//! Hardness and easiness verdicts for MD sets. Verdicts are about the MD set
//! alone and hold for every changeable-attribute query.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::analysis::{
    equivalent_sets, is_pair_preserving, is_strongly_acyclic, label_pair, labeled_equivalent_sets, linear_pair,
    lr_components, md_graph, non_inclusive, InclusionStep,
};
use crate::model::{AttrRef, Md, MdSet};
use crate::{Error, Result};

/// Whether minimally resolved instances can be computed by plain
/// exhaustive expansion in polynomial time.
pub fn prop1_fastpath_applicable(m: &MdSet) -> bool {
    is_strongly_acyclic(m) && m.operators().all(|op| op.is_transitive() && !op.has_infinite_dissimilar_family())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    Hard,
    Easy,
    /// Easy under transitive similarity, hard for some non-transitive one.
    HardForSomeSimilarity,
    Unknown,
}

/// Evaluation of one hardness condition set on a linear pair: (i) a
/// changed attribute feeds the second MD, (ii) an equivalent set avoids the
/// first MD's LHS, (iii) an L-component of the first MD stays out of the
/// second MD's LHS.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionSet {
    /// Relation the conditions are read on.
    pub relation: String,
    /// `(x, y)` for single-relation pairs: equivalent sets are taken on side
    /// `x`, the first MD is read on side `y`.
    pub labeling: Option<(u8, u8)>,
    /// Witnesses of (i).
    pub feeding: BTreeSet<AttrRef>,
    /// Equivalent sets satisfying (ii).
    pub unbounded: Vec<BTreeSet<AttrRef>>,
    /// First L-component satisfying (iii).
    pub l_component: Option<BTreeSet<AttrRef>>,
    pub holds: bool,
}

/// Which classification rule produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Rule {
    /// A linear pair meeting the hardness conditions.
    LinearPairConditions,
    /// A single-relation linear pair meeting a labeled condition set.
    LabeledConditions,
    /// A linear pair missing the conditions under transitive similarity.
    TransitiveDichotomy,
    /// The crossed two-component pattern under non-transitive similarity.
    CrossedPattern,
    /// Linear pair whose RHS sets overlap.
    RhsOverlap,
    /// Acyclic pair-preserving set with a non-inclusive chain.
    NonInclusivePair,
    /// Acyclic pair-preserving set where every changeable LHS attribute is
    /// inclusive.
    AllInclusive,
    /// No dependencies between MDs.
    NonInteracting,
    /// No rule applies.
    NoRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InclusionWitness {
    /// Indices of the two MDs, feeding one first.
    pub pair: (usize, usize),
    /// Non-inclusive wrt both MDs, on the right of the second.
    pub c: AttrRef,
    /// Non-inclusive wrt the second MD, changed by the first and read by the
    /// second.
    pub b: AttrRef,
    pub c_trace: Vec<InclusionStep>,
    pub b_trace: Vec<InclusionStep>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    /// Linear pair as `(m1, m2)` indices.
    pub pair: Option<(usize, usize)>,
    pub conditions: Vec<ConditionSet>,
    pub inclusion: Option<InclusionWitness>,
    /// Changeable LHS attributes found non-inclusive, as `(md, attribute)`.
    pub non_inclusive_lhs: Vec<(usize, AttrRef)>,
    /// Premises that failed, in words.
    pub failed: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Classification {
    pub verdict: Verdict,
    pub rule: Rule,
    pub trace: Trace,
}

impl Classification {
    fn new(verdict: Verdict, rule: Rule, trace: Trace) -> Self {
        Classification { verdict, rule, trace }
    }
}

fn attrs_of(md: &Md, rel: &str) -> (BTreeSet<AttrRef>, BTreeSet<AttrRef>) {
    let f = |s: BTreeSet<AttrRef>| s.into_iter().filter(|a| a.relation == rel).collect();
    (f(md.lhs_attrs()), f(md.rhs_attrs()))
}

/// Conditions (i)-(iii) read on relation `rel` of a two- or three-relation
/// linear pair.
fn relation_conditions(p: &MdSet, m1: &Md, m2: &Md, rel: &str) -> Result<ConditionSet> {
    let (_, rhs1) = attrs_of(m1, rel);
    let lhs1 = m1.lhs_attrs();
    let lhs2 = m2.lhs_attrs();
    let feeding: BTreeSet<AttrRef> = rhs1.intersection(&lhs2).cloned().collect();
    let unbounded: Vec<BTreeSet<AttrRef>> = equivalent_sets(p)?
        .into_iter()
        .filter(|b| b.relation == rel && b.attrs.is_disjoint(&lhs1))
        .map(|b| b.attrs)
        .collect();
    let (l1, _) = lr_components(m1);
    let l_component = l1.blocks.into_iter().find(|l| !l.iter().any(|a| a.relation == rel && lhs2.contains(a)));
    let holds = !feeding.is_empty() && !unbounded.is_empty() && l_component.is_some();
    Ok(ConditionSet { relation: rel.to_string(), labeling: None, feeding, unbounded, l_component, holds })
}

/// Output of the labeling algorithm for single-relation pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledConditions {
    pub m1: Md,
    pub m2: Md,
    /// One entry per `(x, y)` in `(1,1), (1,2), (2,1), (2,2)`.
    pub sets: Vec<ConditionSet>,
}

/// Labels occurrences of the single relation of a linear pair (by MD and
/// by side) and evaluates the four condition sets.
///
/// For `(x, y)`: (i) attribute names changed on side `y` by the first MD
/// and read on side `x` by the second; (ii) side-`x` equivalent sets with no
/// name read on side `y` by the first MD; (iii) an L-component of the first
/// MD whose side-`y` names are not read on side `x` by the second.
pub fn conditions_algorithm(p: &MdSet) -> Result<LabeledConditions> {
    let (i, j) = linear_pair(p)?.ok_or_else(|| Error::Precondition("not a linear pair".into()))?;
    if p.relations().len() != 1 {
        return Err(Error::Precondition("the labeling applies to single-relation pairs".into()));
    }
    let (m1, m2) = label_pair(&p.mds()[i], &p.mds()[j]);
    let rel = String::from(m1.left_relation());
    let lhs1 = m1.lhs_attrs();
    let rhs1 = m1.rhs_attrs();
    let lhs2 = m2.lhs_attrs();
    let (l1, _) = lr_components(&m1);
    let side = |a: &AttrRef| a.label.map_or(0, |l| l.side);
    let names_on = |set: &BTreeSet<AttrRef>, s: u8| -> BTreeSet<String> {
        set.iter().filter(|a| side(a) == s).map(|a| a.attribute.clone()).collect()
    };
    let mut sets = Vec::new();
    for x in [1u8, 2] {
        for y in [1u8, 2] {
            let read2 = names_on(&lhs2, x);
            let feeding: BTreeSet<AttrRef> =
                rhs1.iter().filter(|a| side(a) == y && read2.contains(&a.attribute)).cloned().collect();
            let read1 = names_on(&lhs1, y);
            let unbounded: Vec<BTreeSet<AttrRef>> = labeled_equivalent_sets(&m1, &m2, x)
                .into_iter()
                .filter(|es| es.iter().all(|a| !read1.contains(&a.attribute)))
                .collect();
            let l_component =
                l1.blocks.iter().find(|l| names_on(l, y).is_disjoint(&read2)).cloned();
            let holds = !feeding.is_empty() && !unbounded.is_empty() && l_component.is_some();
            sets.push(ConditionSet {
                relation: rel.clone(),
                labeling: Some((x, y)),
                feeding,
                unbounded,
                l_component,
                holds,
            });
        }
    }
    Ok(LabeledConditions { m1, m2, sets })
}

/// Verdict for a linear pair from the hardness conditions, the transitive
/// dichotomy and the crossed non-transitive pattern.
pub fn classify_linear_pair(p: &MdSet) -> Result<Classification> {
    let (i, j) = linear_pair(p)?.ok_or_else(|| Error::Precondition("not a linear pair".into()))?;
    let (m1, m2) = (&p.mds()[i], &p.mds()[j]);
    let mut trace = Trace { pair: Some((i, j)), ..Trace::default() };
    let rhs1: BTreeSet<AttrRef> = m1.rhs_attrs().iter().map(AttrRef::unlabeled).collect();
    let rhs2: BTreeSet<AttrRef> = m2.rhs_attrs().iter().map(AttrRef::unlabeled).collect();
    if !rhs1.is_disjoint(&rhs2) {
        trace.failed.push("RHS(m1) and RHS(m2) overlap; no general result".into());
        return Ok(Classification::new(Verdict::Unknown, Rule::RhsOverlap, trace));
    }
    let rels = p.relations();
    let (rule, sets) = if rels.len() == 1 {
        (Rule::LabeledConditions, conditions_algorithm(p)?.sets)
    } else {
        let r1 = m1.relations();
        let r2 = m2.relations();
        // With three relations only the shared one can carry the conditions.
        let candidates: Vec<&str> = rels.iter().copied().filter(|r| r1.contains(r) && r2.contains(r)).collect();
        let sets = candidates.into_iter().map(|r| relation_conditions(p, m1, m2, r)).collect::<Result<Vec<_>>>()?;
        (Rule::LinearPairConditions, sets)
    };
    let hard = sets.iter().any(|s| s.holds);
    trace.conditions = sets;
    if hard {
        return Ok(Classification::new(Verdict::Hard, rule, trace));
    }
    trace.failed.push("no condition set holds".into());
    if p.operators().all(|op| op.is_transitive()) {
        return Ok(Classification::new(Verdict::Easy, Rule::TransitiveDichotomy, trace));
    }
    if is_crossed_pattern(m1, m2) {
        return Ok(Classification::new(Verdict::HardForSomeSimilarity, Rule::CrossedPattern, trace));
    }
    trace.failed.push("similarity is not transitive".into());
    Ok(Classification::new(Verdict::Unknown, Rule::NoRule, trace))
}

/// `m1: R[a]~S[b] & R[i]~S[j] -> R[e]:=S[f]` and
/// `m2: R[e]~S[f] & R[a]~S[j] & R[i]~S[b] -> R[g]:=S[h]` over two relations
/// and eight distinct attributes, up to renaming and atom order.
fn is_crossed_pattern(m1: &Md, m2: &Md) -> bool {
    if m1.is_single_predicate() || m1.lhs.len() != 2 || m1.rhs.len() != 1 || m2.lhs.len() != 3 || m2.rhs.len() != 1 {
        return false;
    }
    let (r, s) = (m1.left_relation(), m1.right_relation());
    let oriented = |a: &AttrRef, b: &AttrRef| -> Option<(String, String)> {
        if a.relation == r && b.relation == s {
            Some((a.attribute.clone(), b.attribute.clone()))
        } else if a.relation == s && b.relation == r {
            Some((b.attribute.clone(), a.attribute.clone()))
        } else {
            None
        }
    };
    let Some((a, b)) = oriented(&m1.lhs[0].left, &m1.lhs[0].right) else { return false };
    let Some((i, j)) = oriented(&m1.lhs[1].left, &m1.lhs[1].right) else { return false };
    let Some((e, f)) = oriented(&m1.rhs[0].left, &m1.rhs[0].right) else { return false };
    let Some((g, h)) = oriented(&m2.rhs[0].left, &m2.rhs[0].right) else { return false };
    let left: BTreeSet<&String> = [&a, &i, &e, &g].into_iter().collect();
    let right: BTreeSet<&String> = [&b, &j, &f, &h].into_iter().collect();
    if left.len() != 4 || right.len() != 4 {
        return false;
    }
    let got: Option<BTreeSet<(String, String)>> = m2.lhs.iter().map(|x| oriented(&x.left, &x.right)).collect();
    let want: BTreeSet<(String, String)> = [(e, f), (a, j), (i, b)].into_iter().collect();
    got == Some(want)
}

fn require_acyclic_pp(m: &MdSet) -> Result<()> {
    if !md_graph(m).is_acyclic() {
        return Err(Error::Precondition("MD set is cyclic".into()));
    }
    if !is_pair_preserving(m) {
        return Err(Error::Precondition("MD set is not pair-preserving".into()));
    }
    Ok(())
}

fn sorted_unlabeled(s: BTreeSet<AttrRef>) -> BTreeSet<AttrRef> {
    s.iter().map(AttrRef::unlabeled).collect()
}

/// Verdict for an acyclic, pair-preserving set from non-inclusiveness.
pub fn classify_acyclic_pp(m: &MdSet) -> Result<Classification> {
    require_acyclic_pp(m)?;
    let mut trace = Trace::default();
    let n = m.len();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let (m1, m2) = (&m.mds()[i], &m.mds()[j]);
            let feeding: BTreeSet<AttrRef> =
                sorted_unlabeled(m1.rhs_attrs()).intersection(&sorted_unlabeled(m2.lhs_attrs())).cloned().collect();
            if feeding.is_empty() {
                continue;
            }
            let both: BTreeSet<usize> = [i, j].into_iter().collect();
            let second: BTreeSet<usize> = [j].into_iter().collect();
            for c in sorted_unlabeled(m2.rhs_attrs()) {
                let cn = non_inclusive(m, &c, &both)?;
                if !cn.non_inclusive {
                    continue;
                }
                for b in &feeding {
                    let bn = non_inclusive(m, b, &second)?;
                    if bn.non_inclusive {
                        trace.inclusion = Some(InclusionWitness {
                            pair: (i, j),
                            c: c.clone(),
                            b: b.clone(),
                            c_trace: cn.trace.clone(),
                            b_trace: bn.trace,
                        });
                        return Ok(Classification::new(Verdict::Hard, Rule::NonInclusivePair, trace));
                    }
                }
            }
        }
    }
    trace.failed.push("no pair with a non-inclusive changed attribute and a non-inclusive result".into());
    trace.non_inclusive_lhs = non_inclusive_lhs(m)?;
    if trace.non_inclusive_lhs.is_empty() {
        return Ok(Classification::new(Verdict::Easy, Rule::AllInclusive, trace));
    }
    trace.failed.push("some changeable LHS attribute is non-inclusive wrt its MD".into());
    Ok(Classification::new(Verdict::Unknown, Rule::NoRule, trace))
}

/// Changeable attributes `A` in LHS(m) that are non-inclusive wrt `{m}`.
fn non_inclusive_lhs(m: &MdSet) -> Result<Vec<(usize, AttrRef)>> {
    let changeable = m.changeable();
    let mut out = Vec::new();
    for (k, md) in m.mds().iter().enumerate() {
        let only: BTreeSet<usize> = [k].into_iter().collect();
        for a in sorted_unlabeled(md.lhs_attrs()) {
            if changeable.contains(&a) && non_inclusive(m, &a, &only)?.non_inclusive {
                out.push((k, a));
            }
        }
    }
    Ok(out)
}

/// Verdict for any MD set: non-interacting sets are easy, two-MD linear
/// pairs and acyclic pair-preserving sets go to their rules, and anything
/// else is unknown.
pub fn classify(m: &MdSet) -> Result<Classification> {
    let g = md_graph(m);
    if g.edges.is_empty() {
        return Ok(Classification::new(Verdict::Easy, Rule::NonInteracting, Trace::default()));
    }
    if m.len() == 2 && linear_pair(m)?.is_some() {
        return classify_linear_pair(m);
    }
    if g.is_acyclic() && is_pair_preserving(m) {
        return classify_acyclic_pp(m);
    }
    let mut trace = Trace::default();
    if !g.is_acyclic() {
        trace.failed.push("MD graph is cyclic".into());
    }
    if !is_pair_preserving(m) {
        trace.failed.push("MD set is not pair-preserving".into());
    }
    if m.len() == 2 {
        trace.failed.push("not a linear pair".into());
    }
    Ok(Classification::new(Verdict::Unknown, Rule::NoRule, trace))
}

/// Removes from each MD fed by a source MD (no incoming edges) the atoms
/// reading attributes the source changes, round by round, until no MD feeds
/// another. The result has the same minimally resolved instances when every
/// changeable LHS attribute is inclusive wrt its MD.
pub fn non_interacting_transform(m: &MdSet) -> Result<MdSet> {
    require_acyclic_pp(m)?;
    let bad = non_inclusive_lhs(m)?;
    if let Some((k, a)) = bad.first() {
        return Err(Error::Precondition(format!("{a} in the LHS of MD {k} is non-inclusive wrt it")));
    }
    let mut cur = m.clone();
    loop {
        let g = md_graph(&cur);
        if g.edges.is_empty() {
            return Ok(cur);
        }
        let before = g.longest_path().unwrap_or(0);
        let sources: BTreeSet<usize> = (0..cur.len()).filter(|&v| !g.has_incoming(v)).collect();
        let mut mds: Vec<Md> = cur.mds().to_vec();
        for &(src, dst) in g.edges.iter().filter(|(s, _)| sources.contains(s)) {
            let changed = sorted_unlabeled(cur.mds()[src].rhs_attrs());
            mds[dst].lhs.retain(|a| !changed.contains(&a.left.unlabeled()) && !changed.contains(&a.right.unlabeled()));
            if mds[dst].lhs.is_empty() {
                return Err(Error::Precondition(format!("MD {dst} would lose its whole LHS")));
            }
        }
        let next = cur.with_mds(mds)?;
        let after = md_graph(&next).longest_path().unwrap_or(0);
        if after >= before && !md_graph(&next).edges.is_empty() {
            return Err(Error::Precondition("transformation did not shorten the longest path".into()));
        }
        cur = next;
    }
}
