//! The chase: simultaneous application of all MDs, one step at a time, until
//! the instance satisfies every MD read as an equality-generating dependency.
//!
//! Values are interned and positions are dense indices, so a chase state is a
//! plain `Vec<u32>`. Each step merges the positions of every non-uniform class
//! (the union of all MDs' forced equalities) to one value chosen from a fixed
//! candidate policy: the class's current and original values, the current
//! and original active domains of its columns, and one fresh value per class.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::instance::{Facts, Instance, Position};
use crate::model::{MdSet, Schema};
use crate::similarity::Similarity;
use crate::unionfind::UnionFind;
use crate::{Error, Result};

/// Exploration limits. `max_steps` caps the length of a chase sequence,
/// `max_branches` the number of search nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Budget {
    pub max_steps: usize,
    pub max_branches: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_steps: 16, max_branches: 20_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChaseConfig {
    pub budget: Budget,
    /// Name prefix for fresh constants of operators that allow free naming.
    pub fresh_prefix: String,
    /// Keeps only the cheapest update values per merge class. Results are
    /// exact only when the cap does not cut a needed value.
    pub max_candidate_values: Option<usize>,
}

impl Default for ChaseConfig {
    fn default() -> Self {
        ChaseConfig { budget: Budget::default(), fresh_prefix: "_f".to_string(), max_candidate_values: None }
    }
}

/// Positions of one MD's forced-equality class.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MergeClass {
    pub md: usize,
    /// Index of the R-component of the MD the class's attributes belong to.
    pub component: usize,
    pub positions: Vec<Position>,
    pub values: Vec<String>,
}

pub(crate) type State = Vec<u32>;

const UNKNOWN: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct CompiledMd {
    left: usize,
    right: usize,
    /// (left attribute, right attribute, domain) per similarity atom.
    lhs: Vec<(usize, usize, usize)>,
    /// (left attribute, right attribute) per match atom.
    rhs: Vec<(usize, usize)>,
}

/// An instance and an MD set compiled for repeated chase steps.
#[derive(Debug)]
pub struct Chase {
    schema: Schema,
    tids: Vec<Vec<String>>,
    base: Vec<usize>,
    arity: Vec<usize>,
    col_base: Vec<usize>,
    /// Column of each position.
    pos_col: Vec<u32>,
    /// Relation, row and attribute of each column's positions.
    col_rel: Vec<usize>,
    col_attr: Vec<usize>,
    col_dom: Vec<usize>,
    /// LHS-relevant columns: they occur on the left of some MD.
    col_lhs: Vec<bool>,
    mds: Vec<CompiledMd>,
    values: Vec<String>,
    /// Similarity matrix per domain over all interned values.
    sim: Vec<Vec<bool>>,
    ops: Vec<Arc<dyn Similarity>>,
    /// Fresh values per domain, pairwise dissimilar and dissimilar to the
    /// original active domain.
    pool: Vec<Vec<u32>>,
    orig: State,
    /// Original active domain per column.
    orig_adom: Vec<Vec<u32>>,
    config: ChaseConfig,
}

/// Per-step data derived from a state.
#[derive(Clone, Debug)]
pub(crate) struct Step {
    /// Non-uniform classes, ordered with LHS-relevant classes first.
    pub(crate) classes: Vec<Vec<usize>>,
    /// Whether each class holds an LHS-relevant position.
    pub(crate) relevant: Vec<bool>,
    /// Candidate values per class, cheapest first.
    pub(crate) candidates: Vec<Vec<u32>>,
}

impl Chase {
    pub fn new(d: &Instance, m: &MdSet, config: ChaseConfig) -> Result<Self> {
        if d.schema() != m.schema() {
            return Err(Error::Precondition("instance and MDs use different schemas".into()));
        }
        let schema = m.schema().clone();
        let rels = schema.relations();
        let mut base = Vec::new();
        let mut col_base = Vec::new();
        let mut arity = Vec::new();
        let mut tids = Vec::new();
        let (mut npos, mut ncol) = (0, 0);
        for (r, rel) in rels.iter().enumerate() {
            base.push(npos);
            col_base.push(ncol);
            arity.push(rel.arity());
            tids.push(d.tuples_at(r).iter().map(|t| t.tid.clone()).collect::<Vec<_>>());
            npos += rel.arity() * d.tuples_at(r).len();
            ncol += rel.arity();
        }

        let mut domains: Vec<String> = Vec::new();
        let mut col_rel = Vec::new();
        let mut col_attr = Vec::new();
        let mut col_dom = Vec::new();
        for (r, rel) in rels.iter().enumerate() {
            for (a, attr) in rel.attributes.iter().enumerate() {
                let dom = match domains.iter().position(|x| *x == attr.domain) {
                    Some(i) => i,
                    None => {
                        domains.push(attr.domain.clone());
                        domains.len() - 1
                    }
                };
                col_rel.push(r);
                col_attr.push(a);
                col_dom.push(dom);
            }
        }
        let ops: Vec<Arc<dyn Similarity>> = domains.iter().map(|dn| m.op_for_domain(dn)).collect();

        let idx = |rel: &str, attr: &str| -> (usize, usize) {
            let r = schema.relation_index(rel).expect("validated relation");
            (r, rels[r].index_of(attr).expect("validated attribute"))
        };
        let mut col_lhs = vec![false; ncol];
        let mut mds = Vec::new();
        for md in m.mds() {
            let left = schema.relation_index(md.left_relation()).expect("validated relation");
            let right = schema.relation_index(md.right_relation()).expect("validated relation");
            let mut lhs = Vec::new();
            for atom in &md.lhs {
                let (l, la) = idx(&atom.left.relation, &atom.left.attribute);
                let (r, ra) = idx(&atom.right.relation, &atom.right.attribute);
                col_lhs[col_base[l] + la] = true;
                col_lhs[col_base[r] + ra] = true;
                lhs.push((la, ra, col_dom[col_base[l] + la]));
            }
            let rhs = md
                .rhs
                .iter()
                .map(|atom| (idx(&atom.left.relation, &atom.left.attribute).1, idx(&atom.right.relation, &atom.right.attribute).1))
                .collect();
            mds.push(CompiledMd { left, right, lhs, rhs });
        }

        let mut values: Vec<String> = Vec::new();
        let mut interned: BTreeMap<String, u32> = BTreeMap::new();
        let mut intern = |v: &str, values: &mut Vec<String>| -> u32 {
            if let Some(&i) = interned.get(v) {
                return i;
            }
            let i = values.len() as u32;
            values.push(v.to_string());
            interned.insert(v.to_string(), i);
            i
        };
        let mut orig = Vec::with_capacity(npos);
        let mut pos_col = Vec::with_capacity(npos);
        for (r, _) in rels.iter().enumerate() {
            for t in d.tuples_at(r) {
                for (a, v) in t.values.iter().enumerate() {
                    orig.push(intern(v, &mut values));
                    pos_col.push((col_base[r] + a) as u32);
                }
            }
        }

        let mut orig_adom: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); ncol];
        for (p, &v) in orig.iter().enumerate() {
            orig_adom[pos_col[p] as usize].insert(v);
        }
        let mut pool = Vec::new();
        for (dom, op) in ops.iter().enumerate() {
            let avoid: BTreeSet<&str> = (0..ncol)
                .filter(|&c| col_dom[c] == dom)
                .flat_map(|c| orig_adom[c].iter().map(|&v| values[v as usize].as_str()))
                .collect();
            let avoid: Vec<&str> = avoid.into_iter().collect();
            let slots = (0..npos).filter(|&p| col_dom[pos_col[p] as usize] == dom).count();
            let fresh = fresh_up_to(op.as_ref(), &avoid, slots + slots / 2 + 1, &config.fresh_prefix);
            let ids: Vec<u32> = fresh.iter().map(|v| intern(v, &mut values)).collect();
            pool.push(ids);
        }

        let nv = values.len();
        let sim = ops
            .iter()
            .map(|op| {
                let mut mat = vec![false; nv * nv];
                for a in 0..nv {
                    for b in 0..nv {
                        mat[a * nv + b] = op.similar(&values[a], &values[b]);
                    }
                }
                mat
            })
            .collect();

        Ok(Chase {
            schema,
            tids,
            base,
            arity,
            col_base,
            pos_col,
            col_rel,
            col_attr,
            col_dom,
            col_lhs,
            mds,
            values,
            sim,
            ops,
            pool,
            orig,
            orig_adom: orig_adom.into_iter().map(|s| s.into_iter().collect()).collect(),
            config,
        })
    }

    pub fn config(&self) -> &ChaseConfig {
        &self.config
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    fn npos(&self) -> usize {
        self.orig.len()
    }

    fn pos(&self, rel: usize, row: usize, attr: usize) -> usize {
        self.base[rel] + row * self.arity[rel] + attr
    }

    fn rows(&self, rel: usize) -> usize {
        self.tids[rel].len()
    }

    fn similar(&self, dom: usize, a: u32, b: u32) -> bool {
        self.sim[dom][a as usize * self.values.len() + b as usize]
    }

    pub(crate) fn original(&self) -> &State {
        &self.orig
    }

    pub(crate) fn position(&self, p: usize) -> Position {
        let c = self.pos_col[p] as usize;
        let (r, a) = (self.col_rel[c], self.col_attr[c]);
        let row = (p - self.base[r]) / self.arity[r];
        let rel = &self.schema.relations()[r];
        Position::new(&rel.name, &self.tids[r][row], &rel.attributes[a].name)
    }

    pub(crate) fn value_str(&self, v: u32) -> &str {
        &self.values[v as usize]
    }

    pub(crate) fn decode(&self, s: &[u32]) -> Instance {
        let mut d = Instance::empty(&self.schema);
        for r in 0..self.schema.relations().len() {
            let tuples = d.tuples_at_mut(r);
            for (row, tid) in self.tids[r].iter().enumerate() {
                let start = self.pos(r, row, 0);
                let values = s[start..start + self.arity[r]].iter().map(|&v| self.values[v as usize].clone()).collect();
                tuples.push(crate::instance::Tuple { tid: tid.clone(), values });
            }
        }
        d
    }

    pub(crate) fn view<'a>(&'a self, s: &'a [u32]) -> StateView<'a> {
        StateView { chase: self, state: s }
    }

    /// Calls `f(md, t, t')` for every ordered pair of rows satisfying the
    /// MD's similarity conditions. Pairs touching an unknown LHS value are
    /// skipped. Single-relation MDs include `t = t'`.
    fn for_each_pair(&self, s: &[u32], md_filter: impl Fn(usize) -> bool, mut f: impl FnMut(usize, usize, usize)) {
        for (mi, md) in self.mds.iter().enumerate() {
            if !md_filter(mi) {
                continue;
            }
            for t in 0..self.rows(md.left) {
                let tl = self.pos(md.left, t, 0);
                if md.lhs.iter().any(|&(la, _, _)| s[tl + la] == UNKNOWN) {
                    continue;
                }
                for u in 0..self.rows(md.right) {
                    let ur = self.pos(md.right, u, 0);
                    let ok = md.lhs.iter().all(|&(la, ra, dom)| {
                        let (x, y) = (s[tl + la], s[ur + ra]);
                        y != UNKNOWN && self.similar(dom, x, y)
                    });
                    if ok {
                        f(mi, t, u);
                    }
                }
            }
        }
    }

    /// Union-find over positions joined by the forced equalities of `s`.
    fn union_classes(&self, s: &[u32]) -> UnionFind {
        let mut uf = UnionFind::new(self.npos());
        self.for_each_pair(s, |_| true, |mi, t, u| {
            let md = &self.mds[mi];
            for &(la, ra) in &md.rhs {
                uf.union(self.pos(md.left, t, la), self.pos(md.right, u, ra));
            }
        });
        uf
    }

    /// Classes (size at least two) of positions forced equal in `s`.
    pub(crate) fn classes(&self, s: &[u32]) -> Vec<Vec<usize>> {
        self.union_classes(s).groups().into_iter().filter(|g| g.len() > 1).collect()
    }

    fn uniform(s: &[u32], class: &[usize]) -> bool {
        class.iter().all(|&p| s[p] == s[class[0]])
    }

    /// Positions allowed to change in a step from `s`: those of non-uniform
    /// classes.
    pub(crate) fn modifiable(&self, s: &[u32]) -> Vec<bool> {
        let mut out = vec![false; self.npos()];
        for c in self.classes(s) {
            if !Self::uniform(s, &c) {
                for p in c {
                    out[p] = true;
                }
            }
        }
        out
    }

    /// The literal recursive definition: `(t,A)` is modifiable when some
    /// pair forces it equal to `(t',A')` holding a different value or a
    /// modifiable one. Iterated to the least fixpoint.
    pub(crate) fn modifiable_fixpoint(&self, s: &[u32]) -> Vec<bool> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        self.for_each_pair(s, |_| true, |mi, t, u| {
            let md = &self.mds[mi];
            for &(la, ra) in &md.rhs {
                edges.push((self.pos(md.left, t, la), self.pos(md.right, u, ra)));
            }
        });
        let mut out = vec![false; self.npos()];
        loop {
            let mut changed = false;
            for &(a, b) in &edges {
                for (x, y) in [(a, b), (b, a)] {
                    if !out[x] && (s[x] != s[y] || out[y]) {
                        out[x] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                return out;
            }
        }
    }

    pub(crate) fn is_resolved(&self, s: &[u32]) -> bool {
        self.classes(s).iter().all(|c| Self::uniform(s, c))
    }

    pub(crate) fn changes(&self, s: &[u32]) -> usize {
        s.iter().zip(&self.orig).filter(|(a, b)| a != b).count()
    }

    fn class_domain(&self, class: &[usize]) -> usize {
        self.col_dom[self.pos_col[class[0]] as usize]
    }

    /// Non-uniform classes of `s` with their candidate update values.
    pub(crate) fn step(&self, s: &[u32]) -> Step {
        self.step_with(s, self.classes(s))
    }

    /// Candidate values for the non-uniform members of `classes`.
    fn step_with(&self, s: &[u32], classes: Vec<Vec<usize>>) -> Step {
        let mut classes: Vec<Vec<usize>> = classes.into_iter().filter(|c| !Self::uniform(s, c)).collect();
        let is_relevant = |c: &Vec<usize>| c.iter().any(|&p| self.col_lhs[self.pos_col[p] as usize]);
        // Stable: keeps the smallest-position order inside each group.
        classes.sort_by_key(|c| !is_relevant(c));
        let relevant: Vec<bool> = classes.iter().map(is_relevant).collect();

        let ncol = self.col_dom.len();
        let mut cur_adom: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); ncol];
        for (p, &v) in s.iter().enumerate() {
            cur_adom[self.pos_col[p] as usize].insert(v);
        }
        let present: BTreeSet<u32> = s.iter().copied().collect();
        let mut next_fresh = vec![0usize; self.pool.len()];

        let mut candidates = Vec::with_capacity(classes.len());
        for class in &classes {
            let dom = self.class_domain(class);
            let mut set: BTreeSet<u32> = BTreeSet::new();
            let mut cols: BTreeSet<usize> = BTreeSet::new();
            for &p in class {
                set.insert(s[p]);
                set.insert(self.orig[p]);
                cols.insert(self.pos_col[p] as usize);
            }
            for c in cols {
                set.extend(cur_adom[c].iter().copied());
                set.extend(self.orig_adom[c].iter().copied());
            }
            let pool = &self.pool[dom];
            while next_fresh[dom] < pool.len() && present.contains(&pool[next_fresh[dom]]) {
                next_fresh[dom] += 1;
            }
            if next_fresh[dom] < pool.len() {
                set.insert(pool[next_fresh[dom]]);
                next_fresh[dom] += 1;
            }
            let mut cands: Vec<u32> = set.into_iter().collect();
            cands.sort_by_key(|&v| (class.iter().filter(|&&p| self.orig[p] != v).count(), v));
            if let Some(k) = self.config.max_candidate_values {
                cands.truncate(k.max(1));
            }
            candidates.push(cands);
        }
        Step { classes, relevant, candidates }
    }

    /// Every successor of `s` under the candidate policy, in candidate
    /// order. Empty when `s` is resolved.
    pub(crate) fn successors(&self, s: &[u32], step: &Step, mut f: impl FnMut(&State) -> bool) -> bool {
        fn rec(step: &Step, i: usize, cur: &mut State, f: &mut dyn FnMut(&State) -> bool) -> bool {
            if i == step.classes.len() {
                return f(cur);
            }
            for &v in &step.candidates[i] {
                for &p in &step.classes[i] {
                    cur[p] = v;
                }
                if !rec(step, i + 1, cur, f) {
                    return false;
                }
            }
            true
        }
        if step.classes.is_empty() {
            return true;
        }
        let mut cur = s.to_vec();
        rec(step, 0, &mut cur, &mut f)
    }

    /// Whether no non-uniform class holds an LHS-relevant position: the
    /// pairs cannot change, so any successor is resolved.
    pub(crate) fn next_is_final(step: &Step) -> bool {
        !step.relevant.iter().any(|&r| r)
    }

    /// Largest number of positions of `class` sharing one original value,
    /// and the values reaching it.
    pub(crate) fn max_agree(&self, class: &[usize]) -> (usize, Vec<u32>) {
        let mut count: BTreeMap<u32, usize> = BTreeMap::new();
        for &p in class {
            *count.entry(self.orig[p]).or_default() += 1;
        }
        let best = count.values().copied().max().unwrap_or(0);
        (best, count.into_iter().filter(|&(_, c)| c == best).map(|(v, _)| v).collect())
    }

    /// Columns whose positions can no longer change after a step from a
    /// state in which the columns in `changed` may have changed.
    ///
    /// A column is settled when every MD changing it has settled LHS columns
    /// untouched by the step, and its partners are settled. Greatest
    /// fixpoint; columns no MD changes are always settled.
    pub(crate) fn settled_columns(&self, changed: &[bool]) -> Vec<bool> {
        let ncol = self.col_dom.len();
        let mut settled = vec![true; ncol];
        loop {
            let mut dirty = false;
            for md in &self.mds {
                let lhs_ok = md.lhs.iter().all(|&(la, ra, _)| {
                    let (l, r) = (self.col_base[md.left] + la, self.col_base[md.right] + ra);
                    !changed[l] && !changed[r] && settled[l] && settled[r]
                });
                let rhs_ok = md.rhs.iter().all(|&(la, ra)| {
                    settled[self.col_base[md.left] + la] && settled[self.col_base[md.right] + ra]
                });
                if !(lhs_ok && rhs_ok) {
                    for &(la, ra) in &md.rhs {
                        for c in [self.col_base[md.left] + la, self.col_base[md.right] + ra] {
                            if settled[c] {
                                settled[c] = false;
                                dirty = true;
                            }
                        }
                    }
                }
            }
            if !dirty {
                return settled;
            }
        }
    }

    pub(crate) fn col_of(&self, p: usize) -> usize {
        self.pos_col[p] as usize
    }

    pub(crate) fn ncols(&self) -> usize {
        self.col_dom.len()
    }

    /// `(|K| - max agreement)` summed over the components of unsettled
    /// positions forced equal by pairs whose LHS columns are settled and
    /// whose LHS values are known.
    pub(crate) fn unsettled_bound(&self, s: &[u32], settled: &[bool]) -> usize {
        let md_ok: Vec<bool> = self
            .mds
            .iter()
            .map(|md| {
                md.lhs.iter().all(|&(la, ra, _)| {
                    settled[self.col_base[md.left] + la] && settled[self.col_base[md.right] + ra]
                }) && md.rhs.iter().any(|&(la, _)| !settled[self.col_base[md.left] + la])
            })
            .collect();
        if !md_ok.iter().any(|&b| b) {
            return 0;
        }
        let mut uf = UnionFind::new(self.npos());
        self.for_each_pair(s, |mi| md_ok[mi], |mi, t, u| {
            let md = &self.mds[mi];
            for &(la, ra) in &md.rhs {
                uf.union(self.pos(md.left, t, la), self.pos(md.right, u, ra));
            }
        });
        uf.groups()
            .into_iter()
            .filter(|g| g.len() > 1 && !settled[self.col_of(g[0])])
            .map(|g| g.len() - self.max_agree(&g).0)
            .sum()
    }

    /// Non-singleton classes of one MD's forced equalities. `component`
    /// maps a (relation, attribute) index pair to its R-component.
    pub(crate) fn md_classes(&self, s: &[u32], mi: usize, component: &dyn Fn(usize, usize) -> usize) -> Vec<MergeClass> {
        let mut uf = UnionFind::new(self.npos());
        self.for_each_pair(s, |i| i == mi, |_, t, u| {
            let md = &self.mds[mi];
            for &(la, ra) in &md.rhs {
                uf.union(self.pos(md.left, t, la), self.pos(md.right, u, ra));
            }
        });
        let mut out = Vec::new();
        for g in uf.groups().into_iter().filter(|g| g.len() > 1) {
            let c = self.pos_col[g[0]] as usize;
            out.push(MergeClass {
                md: mi,
                component: component(self.col_rel[c], self.col_attr[c]),
                positions: g.iter().map(|&p| self.position(p)).collect(),
                values: g.iter().map(|&p| self.values[s[p] as usize].clone()).collect(),
            });
        }
        out
    }

    /// Classes computed the transitive way: under an equivalence, rows pair
    /// up exactly when their LHS values fall in the same similarity classes,
    /// so rows are bucketed by that signature instead of tested pairwise.
    fn signature_classes(&self, s: &[u32], value_class: &[Vec<u32>]) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.npos());
        for md in &self.mds {
            let mut buckets: BTreeMap<Vec<u32>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for t in 0..self.rows(md.left) {
                let key = md.lhs.iter().map(|&(la, _, dom)| value_class[dom][s[self.pos(md.left, t, la)] as usize]).collect();
                buckets.entry(key).or_default().0.push(t);
            }
            for u in 0..self.rows(md.right) {
                let key = md.lhs.iter().map(|&(_, ra, dom)| value_class[dom][s[self.pos(md.right, u, ra)] as usize]).collect();
                buckets.entry(key).or_default().1.push(u);
            }
            for (lefts, rights) in buckets.values() {
                if lefts.is_empty() || rights.is_empty() {
                    continue;
                }
                for &(la, ra) in &md.rhs {
                    let anchor = self.pos(md.left, lefts[0], la);
                    for &t in lefts {
                        uf.union(anchor, self.pos(md.left, t, la));
                    }
                    for &u in rights {
                        uf.union(anchor, self.pos(md.right, u, ra));
                    }
                }
            }
        }
        uf.groups().into_iter().filter(|g| g.len() > 1).collect()
    }

    /// Minimally resolved instances by level-wise expansion of every chase
    /// sequence, valid when all operators are equivalences. Shares only the
    /// candidate policy with [`Chase::minimal`].
    pub fn minimal_by_levels(&self) -> Result<Resolution> {
        let nv = self.values.len();
        let value_class: Vec<Vec<u32>> = (0..self.ops.len())
            .map(|dom| {
                (0..nv as u32).map(|v| (0..nv as u32).find(|&w| self.similar(dom, v, w)).unwrap_or(v)).collect()
            })
            .collect();
        let mut stats = Exploration::default();
        let mut level: BTreeSet<State> = BTreeSet::new();
        level.insert(self.orig.clone());
        let mut seen: BTreeSet<State> = BTreeSet::new();
        let mut resolved: BTreeSet<State> = BTreeSet::new();
        let mut steps = 0;
        while !level.is_empty() {
            let mut next = BTreeSet::new();
            for s in &level {
                over_budget(&mut stats, &self.config.budget)?;
                let step = self.step_with(s, self.signature_classes(s, &value_class));
                if step.classes.is_empty() {
                    resolved.insert(s.clone());
                    stats.longest_branch = stats.longest_branch.max(steps);
                    continue;
                }
                if steps >= self.config.budget.max_steps {
                    stats.truncated = true;
                    continue;
                }
                self.successors(s, &step, |child| {
                    if seen.insert(child.clone()) {
                        next.insert(child.clone());
                    }
                    true
                });
            }
            stats.states += level.len();
            level = next;
            steps += 1;
        }
        let min = resolved.iter().map(|s| self.changes(s)).min();
        let best: Vec<&State> = resolved.iter().filter(|s| Some(self.changes(s)) == min).collect();
        Ok(Resolution { instances: self.sorted(best.into_iter()), min_changes: min, stats })
    }
}

/// Fresh values as many as the operator can supply, up to `want`.
fn fresh_up_to(op: &dyn Similarity, avoid: &[&str], want: usize, prefix: &str) -> Vec<String> {
    let mut n = want;
    loop {
        match op.fresh_values(avoid, n, prefix) {
            Ok(v) => return v,
            Err(_) if n > 0 => n = n.min(64) - 1,
            Err(_) => return Vec::new(),
        }
    }
}

/// A chase state seen as relation rows.
pub(crate) struct StateView<'a> {
    chase: &'a Chase,
    state: &'a [u32],
}

impl Facts for StateView<'_> {
    fn schema(&self) -> &Schema {
        &self.chase.schema
    }

    fn row_count(&self, relation: usize) -> usize {
        self.chase.rows(relation)
    }

    fn value(&self, relation: usize, row: usize, attribute: usize) -> &str {
        let v = self.state[self.chase.pos(relation, row, attribute)];
        self.chase.value_str(v)
    }
}

/// Search statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Exploration {
    /// Distinct non-final states expanded.
    pub states: usize,
    /// Search nodes, counted against `max_branches`.
    pub nodes: usize,
    /// Longest number of steps to reach a resolved instance on any branch.
    pub longest_branch: usize,
    /// Some branch revisited an instance of its own chase sequence.
    pub oscillation: bool,
    /// Some branch was cut at `max_steps` without resolving.
    pub truncated: bool,
}

/// Resolved instances with their smallest change count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    /// Sorted by canonical form.
    pub instances: Vec<Instance>,
    pub min_changes: Option<usize>,
    pub stats: Exploration,
}

fn over_budget(stats: &mut Exploration, budget: &Budget) -> Result<()> {
    stats.nodes += 1;
    if stats.nodes > budget.max_branches {
        return Err(Error::BudgetExhausted(alloc::format!("more than {} search nodes", budget.max_branches)));
    }
    Ok(())
}

struct Enumeration {
    memo: BTreeMap<State, Option<usize>>,
    stack: BTreeSet<State>,
    out: BTreeSet<State>,
    stats: Exploration,
}

impl Chase {
    /// Every resolved instance reachable by a chase sequence.
    pub fn enumerate(&self) -> Result<Resolution> {
        let mut e =
            Enumeration { memo: BTreeMap::new(), stack: BTreeSet::new(), out: BTreeSet::new(), stats: Exploration::default() };
        let longest = self.explore(self.orig.clone(), 0, &mut e)?;
        e.stats.longest_branch = longest.unwrap_or(0);
        let min_changes = e.out.iter().map(|s| self.changes(s)).min();
        Ok(Resolution { instances: self.sorted(e.out.iter()), min_changes, stats: e.stats })
    }

    fn sorted<'a>(&self, states: impl Iterator<Item = &'a State>) -> Vec<Instance> {
        let mut v: Vec<Instance> = states.map(|s| self.decode(s)).collect();
        v.sort();
        v
    }

    /// Longest number of steps from `s` to a resolved state, `None` when no
    /// branch from `s` resolves within the budget.
    fn explore(&self, s: State, depth: usize, e: &mut Enumeration) -> Result<Option<usize>> {
        if let Some(&v) = e.memo.get(&s) {
            return Ok(v);
        }
        if e.stack.contains(&s) {
            e.stats.oscillation = true;
            return Ok(None);
        }
        over_budget(&mut e.stats, &self.config.budget)?;
        let step = self.step(&s);
        if step.classes.is_empty() {
            e.out.insert(s.clone());
            e.memo.insert(s, Some(0));
            return Ok(Some(0));
        }
        if depth >= self.config.budget.max_steps {
            e.stats.truncated = true;
            return Ok(None);
        }
        e.stats.states += 1;
        e.stack.insert(s.clone());
        let mut best: Option<usize> = None;
        let mut err = None;
        self.successors(&s, &step, |child| match self.explore(child.clone(), depth + 1, e) {
            Ok(v) => {
                if let Some(v) = v {
                    best = Some(best.map_or(v + 1, |b| b.max(v + 1)));
                }
                true
            }
            Err(x) => {
                err = Some(x);
                false
            }
        });
        e.stack.remove(&s);
        if let Some(x) = err {
            return Err(x);
        }
        e.memo.insert(s, best);
        Ok(best)
    }
}

/// What the minimum search records at optimal resolved states.
pub(crate) enum Goal<'a> {
    /// Every optimal state.
    Collect(BTreeSet<State>),
    /// Whether some optimal state fails the predicate.
    Refute(&'a dyn Fn(&StateView<'_>) -> bool, bool),
}

struct Search<'a> {
    best: usize,
    goal: Goal<'a>,
    visited: BTreeSet<State>,
    stack: BTreeSet<State>,
    stats: Exploration,
}

impl Search<'_> {
    /// Whether a branch whose final cost is at least `lb` can still matter.
    fn open(&self, lb: usize) -> bool {
        match self.goal {
            Goal::Collect(_) => lb <= self.best,
            Goal::Refute(_, found) => lb < self.best || (lb == self.best && !found),
        }
    }
}

impl Chase {
    /// Branch and bound over chase sequences for the smallest change count.
    pub(crate) fn minimize<'a>(&self, goal: Goal<'a>) -> Result<(usize, Goal<'a>, Exploration)> {
        let mut search = Search {
            best: usize::MAX,
            goal,
            visited: BTreeSet::new(),
            stack: BTreeSet::new(),
            stats: Exploration::default(),
        };
        self.search(self.orig.clone(), 0, &mut search)?;
        if search.best == usize::MAX {
            return Err(Error::BudgetExhausted("no chase sequence resolved within the step budget".into()));
        }
        Ok((search.best, search.goal, search.stats))
    }

    /// The minimally resolved instances.
    pub fn minimal(&self) -> Result<Resolution> {
        let (best, goal, stats) = self.minimize(Goal::Collect(BTreeSet::new()))?;
        let Goal::Collect(found) = goal else { unreachable!() };
        Ok(Resolution { instances: self.sorted(found.iter()), min_changes: Some(best), stats })
    }

    fn leaf(&self, s: &State, cost: usize, search: &mut Search<'_>) {
        if cost < search.best {
            search.best = cost;
            match &mut search.goal {
                Goal::Collect(found) => {
                    found.clear();
                    found.insert(s.clone());
                }
                Goal::Refute(check, failed) => *failed = !check(&self.view(s)),
            }
        } else if cost == search.best {
            match &mut search.goal {
                Goal::Collect(found) => {
                    found.insert(s.clone());
                }
                Goal::Refute(check, failed) => {
                    if !*failed {
                        *failed = !check(&self.view(s));
                    }
                }
            }
        }
    }

    fn search(&self, s: State, depth: usize, search: &mut Search<'_>) -> Result<()> {
        over_budget(&mut search.stats, &self.config.budget)?;
        let step = self.step(&s);
        if step.classes.is_empty() {
            let cost = self.changes(&s);
            self.leaf(&s, cost, search);
            return Ok(());
        }
        if depth >= self.config.budget.max_steps {
            search.stats.truncated = true;
            return Ok(());
        }
        if Self::next_is_final(&step) {
            search.stats.longest_branch = search.stats.longest_branch.max(depth + 1);
            return self.final_step(&s, &step, search);
        }
        if search.stack.contains(&s) {
            search.stats.oscillation = true;
            return Ok(());
        }
        if !search.visited.insert(s.clone()) {
            return Ok(());
        }
        search.stats.states += 1;
        search.stack.insert(s.clone());

        let mut changed = vec![false; self.ncols()];
        for c in &step.classes {
            for &p in c {
                changed[self.col_of(p)] = true;
            }
        }
        let settled = self.settled_columns(&changed);
        let class_settled: Vec<bool> = step.classes.iter().map(|c| settled[self.col_of(c[0])]).collect();
        let class_floor: Vec<usize> = step.classes.iter().map(|c| c.len() - self.max_agree(c).0).collect();
        let fixed_cost: usize = {
            let mut in_class = vec![false; s.len()];
            for c in &step.classes {
                for &p in c {
                    in_class[p] = true;
                }
            }
            (0..s.len()).filter(|&p| !in_class[p] && settled[self.col_of(p)] && s[p] != self.orig[p]).count()
        };
        let mut w = s.clone();
        for c in &step.classes {
            for &p in c {
                w[p] = UNKNOWN;
            }
        }
        let ctx = StepBound { step: &step, settled: &settled, class_settled: &class_settled, class_floor: &class_floor, fixed_cost };
        let r = self.assign(&ctx, 0, 0, &mut w, depth, search);
        search.stack.remove(&s);
        r
    }

    /// Chooses values for classes `i..` of a step, pruning by lower bound.
    fn assign(
        &self,
        ctx: &StepBound<'_>,
        i: usize,
        assigned_cost: usize,
        w: &mut State,
        depth: usize,
        search: &mut Search<'_>,
    ) -> Result<()> {
        let step = ctx.step;
        if i == step.classes.len() {
            return self.search(w.clone(), depth + 1, search);
        }
        for &v in &step.candidates[i] {
            over_budget(&mut search.stats, &self.config.budget)?;
            let class = &step.classes[i];
            for &p in class {
                w[p] = v;
            }
            let local = if ctx.class_settled[i] { class.iter().filter(|&&p| self.orig[p] != v).count() } else { 0 };
            let rest: usize = (i + 1..step.classes.len()).filter(|&j| ctx.class_settled[j]).map(|j| ctx.class_floor[j]).sum();
            let lb = ctx.fixed_cost + assigned_cost + local + rest + self.unsettled_bound(w, ctx.settled);
            if search.open(lb) {
                self.assign(ctx, i + 1, assigned_cost + local, w, depth, search)?;
            }
        }
        for &p in &step.classes[i] {
            w[p] = UNKNOWN;
        }
        Ok(())
    }

    /// Resolves a step after which the pairs cannot change: each class takes
    /// one of its most frequent original values.
    fn final_step(&self, s: &State, step: &Step, search: &mut Search<'_>) -> Result<()> {
        let mut out = s.clone();
        let mut cost = 0;
        let mut ties = Vec::with_capacity(step.classes.len());
        for c in &step.classes {
            let (agree, vals) = self.max_agree(c);
            cost += c.len() - agree;
            for &p in c {
                out[p] = vals[0];
            }
            ties.push(vals);
        }
        let mut in_class = vec![false; s.len()];
        for c in &step.classes {
            for &p in c {
                in_class[p] = true;
            }
        }
        cost += (0..s.len()).filter(|&p| !in_class[p] && s[p] != self.orig[p]).count();
        if !search.open(cost) {
            return Ok(());
        }
        self.tie_product(step, &ties, 0, &mut out, cost, search)
    }

    fn tie_product(
        &self,
        step: &Step,
        ties: &[Vec<u32>],
        i: usize,
        out: &mut State,
        cost: usize,
        search: &mut Search<'_>,
    ) -> Result<()> {
        if !search.open(cost) {
            return Ok(());
        }
        if i == ties.len() {
            over_budget(&mut search.stats, &self.config.budget)?;
            self.leaf(out, cost, search);
            return Ok(());
        }
        for &v in &ties[i] {
            for &p in &step.classes[i] {
                out[p] = v;
            }
            self.tie_product(step, ties, i + 1, out, cost, search)?;
        }
        Ok(())
    }
}

struct StepBound<'a> {
    step: &'a Step,
    settled: &'a [bool],
    class_settled: &'a [bool],
    class_floor: &'a [usize],
    fixed_cost: usize,
}

fn compile(d: &Instance, m: &MdSet) -> Result<Chase> {
    Chase::new(d, m, ChaseConfig::default())
}

/// Non-singleton classes of MD `md`'s forced equalities in `d`, tagged with
/// the R-component of their attributes.
pub fn tm_classes(d: &Instance, m: &MdSet, md: usize) -> Result<Vec<MergeClass>> {
    let the_md = m.mds().get(md).ok_or_else(|| Error::Precondition(alloc::format!("no MD with index {md}")))?;
    let chase = compile(d, m)?;
    let (_, rcomps) = crate::analysis::lr_components(the_md);
    let schema = m.schema();
    let component = |rel: usize, attr: usize| {
        let r = &schema.relations()[rel];
        let a = crate::AttrRef::new(&r.name, &r.attributes[attr].name);
        rcomps.blocks.iter().position(|b| b.iter().any(|x| x.unlabeled() == a)).unwrap_or(0)
    };
    Ok(chase.md_classes(chase.original(), md, &component))
}

/// Classes of positions forced equal by some MD in `d` (uniform or not).
pub fn merge_classes(d: &Instance, m: &MdSet) -> Result<Vec<Vec<Position>>> {
    let chase = compile(d, m)?;
    Ok(chase.classes(chase.original()).into_iter().map(|c| c.into_iter().map(|p| chase.position(p)).collect()).collect())
}

/// Positions a chase step from `d` may change, by the recursive definition.
pub fn modifiable_positions(d: &Instance, m: &MdSet) -> Result<BTreeSet<Position>> {
    let chase = compile(d, m)?;
    let flags = chase.modifiable_fixpoint(chase.original());
    Ok(flags.iter().enumerate().filter(|(_, &f)| f).map(|(p, _)| chase.position(p)).collect())
}

/// Whether `d` satisfies every MD with matching read as equality.
pub fn is_resolved(d: &Instance, m: &MdSet) -> Result<bool> {
    let chase = compile(d, m)?;
    Ok(chase.is_resolved(chase.original()))
}

/// Whether `next` is a valid chase step from `cur`: every pair similar in
/// `cur` agrees on its matched attributes in `next`, and only modifiable
/// positions of `cur` changed.
pub fn is_step(cur: &Instance, next: &Instance, m: &MdSet) -> Result<bool> {
    let chase = compile(cur, m)?;
    let mut next_values: Vec<&str> = Vec::new();
    for (r, rel) in m.schema().relations().iter().enumerate() {
        let (a, b) = (cur.tuples_at(r), next.tuples_at(r));
        if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.tid != y.tid) {
            return Err(Error::Precondition(alloc::format!("instances differ in the tuples of {}", rel.name)));
        }
        next_values.extend(b.iter().flat_map(|t| t.values.iter().map(String::as_str)));
    }
    let s = chase.original();
    let classes = chase.classes(s);
    if !classes.iter().all(|c| c.iter().all(|&p| next_values[p] == next_values[c[0]])) {
        return Ok(false);
    }
    let modifiable = chase.modifiable(s);
    Ok((0..s.len()).all(|p| modifiable[p] || chase.value_str(s[p]) == next_values[p]))
}

/// All one-step successors of `d` under the candidate policy.
pub fn successors(d: &Instance, m: &MdSet, config: ChaseConfig) -> Result<Vec<Instance>> {
    let chase = Chase::new(d, m, config)?;
    let s = chase.original();
    let step = chase.step(s);
    let mut out = Vec::new();
    let mut count = 0usize;
    let limit = chase.config().budget.max_branches;
    chase.successors(s, &step, |child| {
        count += 1;
        out.push(chase.decode(child));
        count < limit
    });
    if count >= limit && !step.classes.is_empty() {
        return Err(Error::BudgetExhausted(alloc::format!("more than {limit} successors")));
    }
    Ok(out)
}

/// Every resolved instance reachable from `d`, with exploration statistics.
pub fn enumerate_resolved(d: &Instance, m: &MdSet, config: ChaseConfig) -> Result<Resolution> {
    Chase::new(d, m, config)?.enumerate()
}

/// The resolved instances of `d` with the fewest changes.
pub fn minimally_resolved(d: &Instance, m: &MdSet, config: ChaseConfig) -> Result<Resolution> {
    Chase::new(d, m, config)?.minimal()
}

/// Minimally resolved instances for sets where exhaustive level-wise
/// expansion is polynomial: strongly acyclic, transitive operators with
/// finitely many mutually dissimilar values.
pub fn prop1_fastpath(d: &Instance, m: &MdSet, config: ChaseConfig) -> Result<Resolution> {
    if !crate::classify::prop1_fastpath_applicable(m) {
        return Err(Error::Precondition(
            "needs a strongly acyclic set with transitive operators and finite dissimilar families".into(),
        ));
    }
    Chase::new(d, m, config)?.minimal_by_levels()
}
