//! Cover Subset: given a universe, a family of subsets covering it and one
//! candidate subset, is the candidate in some minimum-size cover?
//!
//! The builders turn a Cover Subset instance into a resolved-answer instance
//! over a hard MD pair such that the candidate tuple is a resolved answer
//! exactly when the candidate subset is not a cover subset.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{equivalent_sets, linear_pair, lr_components};
use crate::chase::ChaseConfig;
use crate::instance::Instance;
use crate::model::{AttrRef, ConjunctiveQuery, MdSet, QueryAtom, Term};
use crate::similarity::{mutually_dissimilar, unit_bits};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverSubsetInstance {
    pub universe: Vec<String>,
    pub subsets: Vec<BTreeSet<String>>,
    /// Index into `subsets`.
    pub candidate: usize,
}

impl CoverSubsetInstance {
    /// Universe `e1..en` and subsets given as bit masks over it.
    pub fn from_masks(n: usize, masks: &[u32], candidate: usize) -> Self {
        let universe: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
        let subsets = masks
            .iter()
            .map(|&m| (0..n).filter(|&i| m >> i & 1 == 1).map(|i| universe[i].clone()).collect())
            .collect();
        CoverSubsetInstance { universe, subsets, candidate }
    }

    /// Checks the construction's assumptions: at least two elements, the
    /// subsets cover the universe using only its elements, and every element
    /// lies in at least two subsets.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCoverSubset(m));
        let universe: BTreeSet<&String> = self.universe.iter().collect();
        if universe.len() != self.universe.len() {
            return bad("duplicate universe element".into());
        }
        if self.universe.len() < 2 {
            return bad("the universe needs at least two elements".into());
        }
        if self.candidate >= self.subsets.len() {
            return bad(format!("candidate {} out of range", self.candidate));
        }
        for (i, s) in self.subsets.iter().enumerate() {
            if let Some(x) = s.iter().find(|x| !universe.contains(x)) {
                return bad(format!("subset {i} has unknown element {x}"));
            }
        }
        for e in &self.universe {
            let deg = self.subsets.iter().filter(|s| s.contains(e)).count();
            if deg < 2 {
                return bad(format!("element {e} is in {deg} subsets, needs at least two"));
            }
        }
        Ok(())
    }

    fn masks(&self) -> (usize, Vec<u32>) {
        let n = self.universe.len();
        let masks = self
            .subsets
            .iter()
            .map(|s| (0..n).filter(|&i| s.contains(&self.universe[i])).fold(0u32, |m, i| m | 1 << i))
            .collect();
        (n, masks)
    }

    /// Subset indices containing element `i`, in order.
    fn containing(&self, i: usize) -> Vec<usize> {
        (0..self.subsets.len()).filter(|&k| self.subsets[k].contains(&self.universe[i])).collect()
    }
}

/// Whether the candidate belongs to some minimum cover, by trying every
/// subfamily.
pub fn solve_cs(cs: &CoverSubsetInstance) -> Result<bool> {
    cs.validate()?;
    let (n, masks) = cs.masks();
    let m = masks.len();
    if m > 24 {
        return Err(Error::InvalidCoverSubset("more than 24 subsets".into()));
    }
    let full = (1u32 << n) - 1;
    let mut best = usize::MAX;
    let mut with_candidate = false;
    for family in 0u32..(1 << m) {
        let size = family.count_ones() as usize;
        if size > best {
            continue;
        }
        let union = (0..m).filter(|&k| family >> k & 1 == 1).fold(0, |u, k| u | masks[k]);
        if union != full {
            continue;
        }
        let has = family >> cs.candidate & 1 == 1;
        if size < best {
            best = size;
            with_candidate = has;
        } else {
            with_candidate |= has;
        }
    }
    Ok(with_candidate)
}

/// Same decision, computed as: taking the candidate first still reaches
/// the minimum cover size.
pub fn solve_cs_by_size(cs: &CoverSubsetInstance) -> Result<bool> {
    cs.validate()?;
    let (n, masks) = cs.masks();
    let full = (1u32 << n) - 1;
    let all: Vec<u32> = masks.clone();
    let rest: Vec<u32> = masks.iter().enumerate().filter(|&(k, _)| k != cs.candidate).map(|(_, &m)| m).collect();
    let best = min_cover(full, &all).expect("validated instances are covered");
    Ok(match min_cover(full & !masks[cs.candidate], &rest) {
        Some(k) => k + 1 == best,
        None => false,
    })
}

/// Smallest number of `sets` covering `need`, branching on the sets that
/// contain the lowest uncovered element.
fn min_cover(need: u32, sets: &[u32]) -> Option<usize> {
    if need == 0 {
        return Some(0);
    }
    let low = need & need.wrapping_neg();
    sets.iter()
        .filter(|&&s| s & low != 0)
        .filter_map(|&s| min_cover(need & !s, sets).map(|k| k + 1))
        .min()
}

/// Every instance with `n` elements and `m` nonempty subsets meeting the
/// invariants, one per class under renaming elements and reordering
/// subsets, paired with each distinct subset as candidate.
pub fn enumerate_cs(n: usize, m: usize) -> Vec<CoverSubsetInstance> {
    let full = (1u32 << n) - 1;
    let perms = permutations(n);
    let permute = |mask: u32, p: &[usize]| (0..n).filter(|&i| mask >> i & 1 == 1).fold(0u32, |acc, i| acc | 1 << p[i]);
    let mut out = Vec::new();
    let mut family = vec![1u32; m];
    loop {
        let ok = family.windows(2).all(|w| w[0] <= w[1])
            && family.iter().fold(0, |u, &s| u | s) == full
            && (0..n).all(|i| family.iter().filter(|&&s| s >> i & 1 == 1).count() >= 2);
        if ok {
            let canonical = perms.iter().all(|p| {
                let mut image: Vec<u32> = family.iter().map(|&s| permute(s, p)).collect();
                image.sort_unstable();
                image >= family
            });
            if canonical {
                let mut seen = BTreeSet::new();
                for (k, &s) in family.iter().enumerate() {
                    if seen.insert(s) {
                        out.push(CoverSubsetInstance::from_masks(n, &family, k));
                    }
                }
            }
        }
        // Next family in lexicographic order over masks 1..=full.
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if family[i] < full {
                family[i] += 1;
                for j in i + 1..m {
                    family[j] = family[i];
                }
                break;
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

/// A generated resolved-answer instance with its provenance.
#[derive(Clone, Debug)]
pub struct ReductionBundle {
    pub cs: CoverSubsetInstance,
    pub mds: MdSet,
    pub instance: Instance,
    pub query: ConjunctiveQuery,
    pub candidate: Vec<String>,
    /// Named value families used by the construction.
    pub values: BTreeMap<String, Vec<String>>,
}

/// Attribute roles of a pair meeting the equality construction's premise.
struct Roles {
    /// Relation whose equivalent set is unbounded, and the other one.
    r: String,
    s: String,
    /// L-component of m1 disjoint from LHS(m2) on `r`.
    l: BTreeSet<AttrRef>,
    /// Unbounded `r`-equivalent set with only RHS(m1) attributes.
    e: BTreeSet<AttrRef>,
    /// The one R-component of m1 meeting `e`.
    y: BTreeSet<AttrRef>,
    /// First R-component of m2.
    z: BTreeSet<AttrRef>,
    /// `s` attributes compared in m2 with an attribute of `e`.
    e_partners: BTreeSet<AttrRef>,
}

fn roles(p: &MdSet) -> Result<(usize, usize, Roles)> {
    let pre = |m: &str| Error::Precondition(m.into());
    let (i, j) = linear_pair(p)?.ok_or_else(|| pre("not a linear pair"))?;
    let (m1, m2) = (&p.mds()[i], &p.mds()[j]);
    let rels: Vec<String> = p.relations().into_iter().map(String::from).collect();
    if rels.len() != 2 || p.schema().relations().len() != 2 {
        return Err(pre("the construction needs a schema of exactly the pair's two relations"));
    }
    if !m1.rhs_attrs().is_disjoint(&m2.rhs_attrs()) {
        return Err(pre("RHS(m1) and RHS(m2) overlap"));
    }
    let (l1, r1) = lr_components(m1);
    let (_, r2) = lr_components(m2);
    let lhs2 = m2.lhs_attrs();
    let rhs1 = m1.rhs_attrs();
    let es = equivalent_sets(p)?;
    for (r, s) in [(&rels[0], &rels[1]), (&rels[1], &rels[0])] {
        let in_r = |a: &AttrRef| a.relation == *r;
        if !rhs1.iter().any(|a| in_r(a) && lhs2.contains(a)) {
            continue;
        }
        let Some(l) = l1.blocks.iter().find(|b| !b.iter().any(|a| in_r(a) && lhs2.contains(a))) else { continue };
        for block in es.iter().filter(|b| b.relation == *r && !b.bounded) {
            if !block.attrs.iter().all(|a| rhs1.contains(a)) {
                continue;
            }
            let meeting: Vec<&BTreeSet<AttrRef>> =
                r1.blocks.iter().filter(|c| c.iter().any(|a| block.attrs.contains(a))).collect();
            if meeting.len() != 1 {
                continue;
            }
            let e_partners = m2
                .lhs
                .iter()
                .filter_map(|atom| {
                    if block.attrs.contains(&atom.left) && atom.right.relation == *s {
                        Some(atom.right.clone())
                    } else if block.attrs.contains(&atom.right) && atom.left.relation == *s {
                        Some(atom.left.clone())
                    } else {
                        None
                    }
                })
                .collect();
            return Ok((
                i,
                j,
                Roles {
                    r: r.clone(),
                    s: s.clone(),
                    l: l.clone(),
                    e: block.attrs.clone(),
                    y: meeting[0].clone(),
                    z: r2.blocks.first().cloned().ok_or_else(|| pre("m2 has no match atom"))?,
                    e_partners,
                },
            ));
        }
    }
    Err(pre("no unbounded equivalent set within one R-component of m1 together with a disjoint L-component"))
}

/// Values for the construction: readable names when the operator keeps them
/// apart, otherwise fresh values from the operator.
fn value_families(p: &MdSet, sizes: &[(&str, usize)]) -> Result<BTreeMap<String, Vec<String>>> {
    let domains: BTreeSet<String> = p
        .schema()
        .relations()
        .iter()
        .flat_map(|r| r.attributes.iter().map(|a| a.domain.clone()))
        .collect();
    if domains.len() != 1 {
        return Err(Error::Precondition("the construction assumes one attribute domain".into()));
    }
    let op = p.op_for_domain(domains.first().expect("one domain"));
    let named: Vec<String> = sizes
        .iter()
        .flat_map(|&(fam, k)| (1..=k).map(move |i| if k == 1 { fam.to_string() } else { format!("{fam}{i}") }))
        .collect();
    let all = if mutually_dissimilar(op.as_ref(), &named, &[]) {
        named
    } else {
        op.fresh_values(&[], named.len(), "v")?
    };
    let mut out = BTreeMap::new();
    let mut at = 0;
    for &(fam, k) in sizes {
        out.insert(fam.to_string(), all[at..at + k].to_vec());
        at += k;
    }
    Ok(out)
}

fn whole_relation_query(p: &MdSet, rel: &str) -> ConjunctiveQuery {
    let arity = p.schema().relation(rel).map_or(0, |r| r.arity());
    let vars: Vec<String> = (1..=arity).map(|i| format!("x{i}")).collect();
    ConjunctiveQuery {
        name: "Q".into(),
        head: vars.clone(),
        body: vec![QueryAtom { relation: rel.into(), terms: vars.into_iter().map(Term::Var).collect() }],
    }
}

/// The equality-regime construction over a hard pair: element groups of
/// tuples sharing a value on an L-component, one tuple per set containing
/// the element, holding that set's value on the R-component meeting an
/// unbounded equivalent set; plus one guard tuple per set on each side.
pub fn build_case1a(cs: &CoverSubsetInstance, p: &MdSet) -> Result<ReductionBundle> {
    cs.validate()?;
    let (_, _, roles) = roles(p)?;
    let (n, m) = (cs.universe.len(), cs.subsets.len());
    let reps = roles.z.len() + 1;
    let values = value_families(p, &[("v", n * reps), ("k", m), ("a", 1), ("b", 1), ("c", 1)])?;
    let (k, a, b, c) = (&values["k"], &values["a"][0], &values["b"][0], &values["c"][0]);
    let v = |i: usize, j: usize| &values["v"][i * reps + j];

    let schema = p.schema();
    let mut d = Instance::empty(schema);
    let row = |rel: &str, f: &dyn Fn(&AttrRef) -> String| -> Vec<String> {
        schema.relation(rel).expect("pair relation").attributes.iter().map(|x| f(&AttrRef::new(rel, &x.name))).collect()
    };
    for i in 0..n {
        for j in 0..reps {
            for &set in &cs.containing(i) {
                for rel in [&roles.r, &roles.s] {
                    let values = row(rel, &|x| {
                        if roles.l.contains(x) {
                            v(i, j).clone()
                        } else if roles.y.contains(x) {
                            k[set].clone()
                        } else {
                            b.clone()
                        }
                    });
                    d.insert(rel, &format!("s{}_{}_{}", i + 1, j + 1, set + 1), values)?;
                }
            }
        }
    }
    for (set, kv) in k.iter().enumerate() {
        let g1 = row(&roles.s, &|x| if roles.e_partners.contains(x) || roles.z.contains(x) { kv.clone() } else { b.clone() });
        d.insert(&roles.s, &format!("g1_{}", set + 1), g1)?;
        let g2 = row(&roles.r, &|x| {
            if roles.e.contains(x) || roles.z.contains(x) {
                kv.clone()
            } else if roles.l.contains(x) {
                a.clone()
            } else {
                b.clone()
            }
        });
        d.insert(&roles.r, &format!("g2_{}", set + 1), g2)?;
    }
    for rel in [&roles.r, &roles.s] {
        d.insert(rel, "c", row(rel, &|_| c.clone()))?;
    }
    let candidate = d.tuples(&roles.s)[d.tuples(&roles.s).len() - 1 - m + cs.candidate].values.clone();
    Ok(ReductionBundle {
        cs: cs.clone(),
        mds: p.clone(),
        instance: d,
        query: whole_relation_query(p, &roles.s),
        candidate,
        values,
    })
}

/// The crossed pair over bit strings, where strings are similar when they
/// share a 1 bit.
pub fn crossed_bits_pair() -> MdSet {
    let schema = crate::parse_schema("R(A:bits, E:bits, G:bits, I:bits)\nS(B:bits, F:bits, H:bits, J:bits)")
        .expect("fixed schema");
    crate::parse_mds(
        "m1: R[A] ~bitshare S[B] & R[I] ~bitshare S[J] -> R[E] := S[F]\n\
         m2: R[E] ~bitshare S[F] & R[A] ~bitshare S[J] & R[I] ~bitshare S[B] -> R[G] := S[H]",
        &schema,
    )
    .expect("fixed MDs")
}

/// The bit-string construction over [`crossed_bits_pair`]: element `i` is
/// the unit string `v_i` of n+1 bits, set `j` the unit string `k_j` of m
/// bits, `a` all zeros, `b` the unit at bit n+1, `c` all ones.
pub fn build_prop2(cs: &CoverSubsetInstance) -> Result<ReductionBundle> {
    cs.validate()?;
    let p = crossed_bits_pair();
    let (n, m) = (cs.universe.len(), cs.subsets.len());
    let v: Vec<String> = (0..n).map(|i| unit_bits(n + 1, i)).collect();
    let k: Vec<String> = (0..m).map(|j| unit_bits(m, j)).collect();
    let a = "0".repeat(n + 1);
    let b = unit_bits(n + 1, n);
    let c = "1".repeat(n + 1);
    let mut d = Instance::empty(p.schema());
    for (i, vi) in v.iter().enumerate() {
        for &set in &cs.containing(i) {
            let tid = format!("s{}_{}", i + 1, set + 1);
            // R(A, E, G, I) and S(B, F, H, J).
            d.insert("R", &tid, vec![vi.clone(), k[set].clone(), a.clone(), c.clone()])?;
            d.insert("S", &tid, vec![vi.clone(), k[set].clone(), a.clone(), c.clone()])?;
        }
    }
    for (set, kv) in k.iter().enumerate() {
        d.insert("S", &format!("g1_{}", set + 1), vec![b.clone(), kv.clone(), kv.clone(), c.clone()])?;
    }
    let candidate = vec![b.clone(), k[cs.candidate].clone(), k[cs.candidate].clone(), c.clone()];
    let mut values = BTreeMap::new();
    values.insert("v".to_string(), v);
    values.insert("k".to_string(), k);
    values.insert("a".to_string(), vec![a]);
    values.insert("b".to_string(), vec![b]);
    values.insert("c".to_string(), vec![c]);
    Ok(ReductionBundle { cs: cs.clone(), query: whole_relation_query(&p, "S"), mds: p, instance: d, candidate, values })
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verification {
    /// The candidate tuple is an answer in every minimally resolved instance.
    pub resolved_answer: bool,
    /// The candidate subset belongs to some minimum cover.
    pub cover_subset: bool,
    pub min_changes: usize,
    /// `resolved_answer` is the negation of `cover_subset`.
    pub holds: bool,
}

/// Decides both sides of a bundle independently and compares them.
pub fn verify_bundle(bundle: &ReductionBundle, config: ChaseConfig) -> Result<Verification> {
    let cover_subset = solve_cs(&bundle.cs)?;
    let member =
        crate::query::is_resolved_answer(&bundle.query, &bundle.instance, &bundle.mds, &bundle.candidate, config)?;
    Ok(Verification {
        resolved_answer: member.member,
        cover_subset,
        min_changes: member.min_changes,
        holds: member.member != cover_subset,
    })
}
