//! Syntactic analyses of MD sets: dependency graphs, attribute closure,
//! L/R-components, equivalent sets, pair preservation and non-inclusiveness.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{AttrRef, Md, MdSet};
use crate::unionfind::UnionFind;
use crate::{Error, Result};

/// Directed graph over MD indices.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MdGraph {
    pub vertices: usize,
    pub edges: BTreeSet<(usize, usize)>,
    pub augmented: bool,
}

impl MdGraph {
    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((v, 0)..(v + 1, 0)).map(|e| e.1)
    }

    pub fn has_incoming(&self, v: usize) -> bool {
        self.edges.iter().any(|e| e.1 == v)
    }

    /// Topological order, or `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = alloc::vec![0usize; self.vertices];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..self.vertices).filter(|v| indeg[*v] == 0).rev().collect();
        let mut order = Vec::with_capacity(self.vertices);
        while let Some(v) = ready.pop() {
            order.push(v);
            for w in self.successors(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        (order.len() == self.vertices).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Number of edges on a longest path, `None` when cyclic.
    pub fn longest_path(&self) -> Option<usize> {
        let order = self.topological_order()?;
        let mut dist = alloc::vec![0usize; self.vertices];
        for v in order {
            for w in self.successors(v) {
                dist[w] = dist[w].max(dist[v] + 1);
            }
        }
        Some(dist.into_iter().max().unwrap_or(0))
    }
}

fn graph_from(m: &MdSet, augmented: bool, connects: impl Fn(&Md, &Md) -> bool) -> MdGraph {
    let mds = m.mds();
    let mut edges = BTreeSet::new();
    for (i, a) in mds.iter().enumerate() {
        for (j, b) in mds.iter().enumerate() {
            if connects(a, b) {
                edges.insert((i, j));
            }
        }
    }
    MdGraph { vertices: mds.len(), edges, augmented }
}

/// Edge `m1 -> m2` iff RHS(m1) and LHS(m2) share an attribute.
pub fn md_graph(m: &MdSet) -> MdGraph {
    graph_from(m, false, |a, b| {
        let lhs = b.lhs_attrs();
        a.rhs_attrs().iter().any(|x| lhs.contains(x))
    })
}

/// A partition of attributes into disjoint blocks, each sorted, blocks
/// ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    pub blocks: Vec<BTreeSet<AttrRef>>,
}

impl Partition {
    fn build(carrier: BTreeSet<AttrRef>, links: impl IntoIterator<Item = (AttrRef, AttrRef)>) -> Self {
        let items: Vec<AttrRef> = carrier.into_iter().collect();
        let index: BTreeMap<&AttrRef, usize> = items.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut uf = UnionFind::new(items.len());
        for (a, b) in links {
            if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
                uf.union(i, j);
            }
        }
        let blocks = uf
            .groups()
            .into_iter()
            .map(|g| g.into_iter().map(|i| items[i].clone()).collect())
            .collect();
        Partition { blocks }
    }

    pub fn block_of(&self, a: &AttrRef) -> Option<&BTreeSet<AttrRef>> {
        self.blocks.iter().find(|b| b.contains(a))
    }
}

/// Reflexive-transitive closure of the `:=` atoms over every schema attribute.
pub fn attribute_closure(m: &MdSet) -> Partition {
    let mut carrier: BTreeSet<AttrRef> = m.schema().all_attributes().into_iter().collect();
    let mut links = Vec::new();
    for md in m.mds() {
        for a in &md.rhs {
            carrier.insert(a.left.clone());
            carrier.insert(a.right.clone());
            links.push((a.left.clone(), a.right.clone()));
        }
    }
    Partition::build(carrier, links)
}

/// Edge `m -> m'` iff some attribute of RHS(m) has a closure class meeting LHS(m').
pub fn augmented_md_graph(m: &MdSet) -> MdGraph {
    let closure = attribute_closure(m);
    graph_from(m, true, |a, b| {
        let lhs = b.lhs_attrs();
        a.rhs_attrs()
            .iter()
            .any(|x| closure.block_of(x).is_some_and(|blk| blk.iter().any(|y| lhs.contains(y))))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrongAcyclicity {
    pub strongly_acyclic: bool,
    /// Longest path length of the augmented graph when acyclic.
    pub longest_path: Option<usize>,
}

pub fn strong_acyclicity(m: &MdSet) -> StrongAcyclicity {
    let g = augmented_md_graph(m);
    let d = g.longest_path();
    StrongAcyclicity { strongly_acyclic: d.is_some(), longest_path: d }
}

pub fn is_strongly_acyclic(m: &MdSet) -> bool {
    strong_acyclicity(m).strongly_acyclic
}

/// L-components (over `~` atoms) and R-components (over `:=` atoms) of one MD.
pub fn lr_components(md: &Md) -> (Partition, Partition) {
    let l = Partition::build(md.lhs_attrs(), md.lhs.iter().map(|a| (a.left.clone(), a.right.clone())));
    let r = Partition::build(md.rhs_attrs(), md.rhs.iter().map(|a| (a.left.clone(), a.right.clone())));
    (l, r)
}

/// `Some((m1, m2))` when the only edge between the two MDs is `m1 -> m2`.
/// Self-loops (an MD changing its own LHS attributes) are ignored here.
pub fn linear_pair(m: &MdSet) -> Result<Option<(usize, usize)>> {
    if m.len() != 2 {
        return Err(Error::Precondition(alloc::format!("a linear pair has 2 MDs, got {}", m.len())));
    }
    let g = md_graph(m);
    Ok(match g.edges.iter().filter(|(a, b)| a != b).collect::<Vec<_>>().as_slice() {
        [&(a, b)] => Some((a, b)),
        _ => None,
    })
}

pub fn is_linear_pair(m: &MdSet) -> Result<bool> {
    Ok(linear_pair(m)?.is_some())
}

/// One equivalent set. For single-relation pairs the attributes carry
/// occurrence labels and `superscript` names the side they come from.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EsBlock {
    pub relation: String,
    pub superscript: Option<u8>,
    pub attrs: BTreeSet<AttrRef>,
    pub bounded: bool,
}

/// Occurrence-labeled copies of a single-relation pair: attributes of the
/// first MD get `md = 1`, of the second `md = 2`; left occurrences get
/// `side = 1`, right occurrences `side = 2`.
pub fn label_pair(m1: &Md, m2: &Md) -> (Md, Md) {
    fn label(md: &Md, k: u8) -> Md {
        let mut out = md.unlabeled();
        for a in &mut out.lhs {
            a.left = a.left.labeled(k, 1);
            a.right = a.right.labeled(k, 2);
        }
        for a in &mut out.rhs {
            a.left = a.left.labeled(k, 1);
            a.right = a.right.labeled(k, 2);
        }
        out
    }
    (label(m1, 1), label(m2, 2))
}

fn components_links(p: &Partition) -> Vec<(AttrRef, AttrRef)> {
    p.blocks
        .iter()
        .flat_map(|b| {
            let first = b.iter().next().cloned();
            b.iter().skip(1).map(move |x| (first.clone().unwrap(), x.clone()))
        })
        .collect()
}

/// Equivalent sets of a two- or three-relation linear pair, one list per
/// relation occurring in both roles of interest.
fn plain_equivalent_sets(m1: &Md, m2: &Md) -> Vec<EsBlock> {
    let (_, r1) = lr_components(m1);
    let (l2, _) = lr_components(m2);
    let lhs1 = m1.lhs_attrs();
    let lhs2 = m2.lhs_attrs();
    let rels: BTreeSet<String> = m1
        .relations()
        .into_iter()
        .chain(m2.relations())
        .map(String::from)
        .collect();
    let mut out = Vec::new();
    for rel in rels {
        let carrier: BTreeSet<AttrRef> = m1
            .rhs_attrs()
            .into_iter()
            .chain(lhs2.iter().cloned())
            .filter(|a| a.relation == rel)
            .collect();
        let mut links = components_links(&restrict(&r1, &rel));
        links.extend(components_links(&restrict(&l2, &rel)));
        for attrs in Partition::build(carrier, links).blocks {
            if attrs.iter().any(|a| lhs2.contains(a)) {
                let bounded = attrs.iter().any(|a| lhs1.contains(a));
                out.push(EsBlock { relation: rel.clone(), superscript: None, attrs, bounded });
            }
        }
    }
    out
}

fn restrict(p: &Partition, rel: &str) -> Partition {
    Partition {
        blocks: p
            .blocks
            .iter()
            .map(|b| b.iter().filter(|a| a.relation == rel).cloned().collect::<BTreeSet<_>>())
            .filter(|b| !b.is_empty())
            .collect(),
    }
}

/// Equivalent sets on side `x` of a labeled single-relation pair. Attributes
/// of the same name are linked across the two MDs within one side.
pub fn labeled_equivalent_sets(m1: &Md, m2: &Md, x: u8) -> Vec<BTreeSet<AttrRef>> {
    let on_side = |a: &AttrRef| a.label.is_some_and(|l| l.side == x);
    let (_, r1) = lr_components(m1);
    let (l2, _) = lr_components(m2);
    let lhs2 = m2.lhs_attrs();
    let carrier: BTreeSet<AttrRef> = m1
        .rhs_attrs()
        .into_iter()
        .chain(lhs2.iter().cloned())
        .filter(|a| on_side(a))
        .collect();
    let mut links = Vec::new();
    for p in [&r1, &l2] {
        for b in &p.blocks {
            let side: Vec<&AttrRef> = b.iter().filter(|a| on_side(a)).collect();
            for w in side.windows(2) {
                links.push((w[0].clone(), w[1].clone()));
            }
        }
    }
    for a in &carrier {
        for b in &carrier {
            if a.attribute == b.attribute && a < b {
                links.push((a.clone(), b.clone()));
            }
        }
    }
    Partition::build(carrier, links)
        .blocks
        .into_iter()
        .filter(|blk| blk.iter().any(|a| lhs2.contains(a)))
        .collect()
}

/// Equivalent sets of a linear pair. Single-relation pairs are labeled
/// first and reported per side; `bounded` then means the block shares an
/// attribute name with LHS(m1).
pub fn equivalent_sets(m: &MdSet) -> Result<Vec<EsBlock>> {
    let (i, j) = linear_pair(m)?.ok_or_else(|| Error::Precondition("not a linear pair".into()))?;
    let (m1, m2) = (&m.mds()[i], &m.mds()[j]);
    if m.relations().len() > 1 {
        return Ok(plain_equivalent_sets(m1, m2));
    }
    let (l1, l2) = label_pair(m1, m2);
    let names1: BTreeSet<String> = m1.lhs_attrs().into_iter().map(|a| a.attribute).collect();
    let rel = String::from(m1.left_relation());
    let mut out = Vec::new();
    for x in [1u8, 2] {
        for attrs in labeled_equivalent_sets(&l1, &l2, x) {
            let bounded = attrs.iter().any(|a| names1.contains(&a.attribute));
            out.push(EsBlock { relation: rel.clone(), superscript: Some(x), attrs, bounded });
        }
    }
    Ok(out)
}

/// Partner attributes of every attribute over all atoms of the set.
pub fn partners(m: &MdSet) -> BTreeMap<AttrRef, BTreeSet<AttrRef>> {
    let mut out: BTreeMap<AttrRef, BTreeSet<AttrRef>> = BTreeMap::new();
    let mut add = |a: &AttrRef, b: &AttrRef| {
        out.entry(a.unlabeled()).or_default().insert(b.unlabeled());
        out.entry(b.unlabeled()).or_default().insert(a.unlabeled());
    };
    for md in m.mds() {
        for a in &md.lhs {
            add(&a.left, &a.right);
        }
        for a in &md.rhs {
            add(&a.left, &a.right);
        }
    }
    out
}

/// Every attribute occurring in the set has exactly one partner.
pub fn is_pair_preserving(m: &MdSet) -> bool {
    partners(m).values().all(|p| p.len() == 1)
}

/// One recursion step of a non-inclusiveness derivation: `attribute` is on
/// the right of MD `md`, and `witness` is the left-hand attribute used.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InclusionStep {
    pub md: usize,
    pub attribute: AttrRef,
    pub witness: AttrRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NonInclusion {
    pub non_inclusive: bool,
    /// Derivation steps in depth-first order when `non_inclusive` holds.
    pub trace: Vec<InclusionStep>,
}

/// Whether `b` is non-inclusive with respect to the MDs `subset` (indices).
/// An attribute on the right of no MD outside `subset` is non-inclusive.
pub fn non_inclusive(m: &MdSet, b: &AttrRef, subset: &BTreeSet<usize>) -> Result<NonInclusion> {
    if !md_graph(m).is_acyclic() {
        return Err(Error::Precondition("MD set is cyclic".into()));
    }
    if !is_pair_preserving(m) {
        return Err(Error::Precondition("MD set is not pair-preserving".into()));
    }
    let sub_lhs: BTreeSet<AttrRef> = subset
        .iter()
        .filter_map(|i| m.mds().get(*i))
        .flat_map(|md| md.lhs_attrs())
        .map(|a| a.unlabeled())
        .collect();
    let mut trace = Vec::new();
    let ok = non_inclusive_rec(m, &b.unlabeled(), subset, &sub_lhs, m.len() + 1, &mut trace)?;
    if !ok {
        trace.clear();
    }
    Ok(NonInclusion { non_inclusive: ok, trace })
}

fn lhs_in_order(md: &Md) -> Vec<AttrRef> {
    let mut out: Vec<AttrRef> = Vec::new();
    for a in &md.lhs {
        for x in [&a.left, &a.right] {
            let x = x.unlabeled();
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

fn non_inclusive_rec(
    m: &MdSet,
    b: &AttrRef,
    subset: &BTreeSet<usize>,
    sub_lhs: &BTreeSet<AttrRef>,
    fuel: usize,
    trace: &mut Vec<InclusionStep>,
) -> Result<bool> {
    if fuel == 0 {
        return Err(Error::Precondition("non-inclusiveness recursion did not terminate".into()));
    }
    for (k, md) in m.mds().iter().enumerate() {
        if subset.contains(&k) || !md.rhs_attrs().iter().any(|x| x.unlabeled() == *b) {
            continue;
        }
        let mut found = false;
        for c in lhs_in_order(md) {
            if sub_lhs.contains(&c) {
                continue;
            }
            let mark = trace.len();
            trace.push(InclusionStep { md: k, attribute: b.clone(), witness: c.clone() });
            if non_inclusive_rec(m, &c, subset, sub_lhs, fuel - 1, trace)? {
                found = true;
                break;
            }
            trace.truncate(mark);
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}
