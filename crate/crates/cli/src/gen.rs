//! Seeded random MD sets and instances for randomized checks.

use mdchase_core::analysis::{is_strongly_acyclic, linear_pair};
use mdchase_core::{parse_mds, parse_schema, Instance, MdSet, Schema};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick_atoms(rng: &mut Rng8, attrs: &[&str], left: &str, right: &str, op: &str, max: usize) -> String {
    let n = rng.gen_range(1..=max);
    (0..n)
        .map(|_| {
            let a = attrs.choose(rng).expect("attributes");
            let b = attrs.choose(rng).expect("attributes");
            format!("{left}[{a}] {op} {right}[{b}]")
        })
        .collect::<Vec<_>>()
        .join(" & ")
}

/// One random MD over `R` and `S` (or `R` alone) as text, with `op` as the
/// similarity operator name (empty for equality).
pub fn md_text(rng: &mut Rng8, attrs: &[&str], op: &str) -> String {
    let right = if rng.gen_bool(0.5) { "S" } else { "R" };
    let sim = if op.is_empty() { "~".to_string() } else { format!("~{op}") };
    format!("{} -> {}", pick_atoms(rng, attrs, "R", right, &sim, 2), pick_atoms(rng, attrs, "R", right, ":=", 2))
}

pub fn two_relation_schema(attrs: &[&str], domain: Option<&str>) -> Schema {
    let cols: Vec<String> = attrs.iter().map(|a| domain.map_or(a.to_string(), |d| format!("{a}:{d}"))).collect();
    parse_schema(&format!("R({})\nS({})", cols.join(", "), cols.join(", "))).expect("generated schema")
}

/// A strongly acyclic set of 1 to `max_mds` MDs over `R(A,B,C)`, `S(A,B,C)`.
pub fn strongly_acyclic_set(rng: &mut Rng8, max_mds: usize) -> MdSet {
    let attrs = ["A", "B", "C"];
    let schema = two_relation_schema(&attrs, None);
    loop {
        let n = rng.gen_range(1..=max_mds);
        let text: Vec<String> = (0..n).map(|_| md_text(rng, &attrs, "")).collect();
        let m = parse_mds(&text.join("\n"), &schema).expect("generated MDs");
        if is_strongly_acyclic(&m) {
            return m;
        }
    }
}

/// A linear pair with disjoint RHS sets over five attributes.
pub fn linear_pair_disjoint_rhs(rng: &mut Rng8, op: &str, domain: Option<&str>) -> MdSet {
    let attrs = ["A", "B", "C", "D", "E"];
    let schema = two_relation_schema(&attrs, domain);
    loop {
        let text = format!("{}\n{}", md_text(rng, &attrs, op), md_text(rng, &attrs, op));
        let m = parse_mds(&text, &schema).expect("generated MDs");
        let (a, b) = (&m.mds()[0], &m.mds()[1]);
        if linear_pair(&m).expect("two MDs").is_some() && a.rhs_attrs().is_disjoint(&b.rhs_attrs()) {
            return m;
        }
    }
}

/// 1 to `max_tuples` tuples over the schema's relations with values drawn
/// from `values`.
pub fn instance(rng: &mut Rng8, schema: &Schema, max_tuples: usize, values: &[&str]) -> Instance {
    let mut d = Instance::empty(schema);
    let n = rng.gen_range(1..=max_tuples);
    for k in 0..n {
        let rel = schema.relations().choose(rng).expect("relations");
        let row = (0..rel.arity()).map(|_| values.choose(rng).expect("values").to_string()).collect();
        d.insert(&rel.name, &format!("t{}", k + 1), row).expect("fresh tid, right arity");
    }
    d
}

/// A set meeting the level-wise route's requirements: strongly acyclic
/// under the first-character equality operator.
pub fn fastpath_set(rng: &mut Rng8, max_mds: usize) -> MdSet {
    let attrs = ["A", "B", "C"];
    let schema = two_relation_schema(&attrs, Some("code"));
    loop {
        let n = rng.gen_range(1..=max_mds);
        let text: Vec<String> = (0..n).map(|_| md_text(rng, &attrs, "prefix1")).collect();
        let m = parse_mds(&text.join("\n"), &schema).expect("generated MDs");
        if is_strongly_acyclic(&m) {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_output() {
        let a: Vec<String> = (0..5).map(|_| strongly_acyclic_set(&mut rng(7), 4).to_string()).collect();
        let b: Vec<String> = (0..5).map(|_| strongly_acyclic_set(&mut rng(7), 4).to_string()).collect();
        assert_eq!(a, b);
        let mut r = rng(3);
        let m = linear_pair_disjoint_rhs(&mut r, "", None);
        assert_eq!(m.len(), 2);
        let d = instance(&mut r, m.schema(), 6, &["a", "b"]);
        assert!((1..=6).contains(&d.len()));
    }
}
