use mdchase_core::analysis::{linear_pair, md_graph};
use mdchase_core::classify::*;
use mdchase_core::{parse_mds, parse_schema, MdSet};
use proptest::prelude::*;

const ATTRS: [&str; 5] = ["A", "B", "C", "D", "E"];

fn md_text(attrs: &'static [&'static str]) -> impl Strategy<Value = String> {
    let atom = (0..attrs.len(), 0..attrs.len());
    (any::<bool>(), prop::collection::vec(atom.clone(), 1..4), prop::collection::vec(atom, 1..3)).prop_map(
        move |(two, lhs, rhs)| {
            let other = if two { "S" } else { "R" };
            let side = |xs: &[(usize, usize)], op: &str| {
                xs.iter().map(|&(i, j)| format!("R[{}] {op} {other}[{}]", attrs[i], attrs[j])).collect::<Vec<_>>().join(" & ")
            };
            format!("{} -> {}", side(&lhs, "~"), side(&rhs, ":="))
        },
    )
}

fn build(text: &str) -> MdSet {
    let schema = parse_schema("R(A, B, C, D, E)\nS(A, B, C, D, E)\nT(A, B, C, D, E)\nU(A, B, C, D, E)").unwrap();
    parse_mds(text, &schema).unwrap()
}

fn rhs_disjoint(m: &MdSet) -> bool {
    let (a, b) = (&m.mds()[0], &m.mds()[1]);
    a.rhs_attrs().is_disjoint(&b.rhs_attrs())
}

/// Pair-preserving MDs: every atom pairs an attribute with its namesake.
fn pp_md(two: bool) -> impl Strategy<Value = String> {
    (prop::collection::btree_set(0..ATTRS.len(), 1..4), prop::collection::btree_set(0..ATTRS.len(), 1..3)).prop_map(
        move |(lhs, rhs)| {
            let other = if two { "S" } else { "R" };
            let side = |xs: &std::collections::BTreeSet<usize>, op: &str| {
                xs.iter().map(|&i| format!("R[{}] {op} {other}[{}]", ATTRS[i], ATTRS[i])).collect::<Vec<_>>().join(" & ")
            };
            format!("{} -> {}", side(&lhs, "~"), side(&rhs, ":="))
        },
    )
}

fn pp_pair() -> impl Strategy<Value = String> {
    any::<bool>().prop_flat_map(|two| (pp_md(two), pp_md(two)).prop_map(|(a, b)| format!("{a}\n{b}")))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, max_global_rejects: 50_000, ..ProptestConfig::default() })]

    /// Under a transitive operator, a linear pair with disjoint RHS sets is
    /// always decided.
    #[test]
    fn transitive_pairs_are_decided(a in md_text(&ATTRS), b in md_text(&ATTRS)) {
        let m = build(&format!("{a}\n{b}"));
        prop_assume!(linear_pair(&m).unwrap().is_some() && rhs_disjoint(&m));
        let c = classify_linear_pair(&m).unwrap();
        prop_assert!(matches!(c.verdict, Verdict::Hard | Verdict::Easy), "{:?}", c);
    }

    /// Renaming relations and attributes and reversing MD and atom order do
    /// not change the verdict.
    #[test]
    fn verdict_is_invariant(a in md_text(&ATTRS), b in md_text(&ATTRS), c in md_text(&ATTRS)) {
        for lines in [vec![a.clone(), b.clone()], vec![a, b, c]] {
            let text = lines.join("\n");
            let m = build(&text);
            let Ok(want) = classify(&m) else { continue };
            let renamed: String = text
                .chars()
                .map(|ch| match ch { 'R' => 'T', 'S' => 'U', 'A' => 'E', 'E' => 'A', 'B' => 'D', 'D' => 'B', x => x })
                .collect();
            let reversed: Vec<String> = renamed
                .lines()
                .rev()
                .map(|l| {
                    let (lhs, rhs) = l.split_once(" -> ").unwrap();
                    let flip = |s: &str, sep: &str| { let mut v: Vec<&str> = s.split(sep).collect(); v.reverse(); v.join(sep) };
                    format!("{} -> {}", flip(lhs, " & "), flip(rhs, " & "))
                })
                .collect();
            let got = classify(&build(&reversed.join("\n"))).unwrap();
            prop_assert_eq!(got.verdict, want.verdict);
        }
    }

    /// For pair-preserving linear pairs, the non-inclusiveness rule and the
    /// linear-pair conditions agree on hardness.
    #[test]
    fn pair_preserving_rules_agree(text in pp_pair()) {
        let m = build(&text);
        prop_assume!(linear_pair(&m).unwrap().is_some() && rhs_disjoint(&m) && md_graph(&m).is_acyclic());
        let lp = classify_linear_pair(&m).unwrap();
        let pp = classify_acyclic_pp(&m).unwrap();
        prop_assert_eq!(lp.verdict == Verdict::Hard, pp.verdict == Verdict::Hard, "{:?} {:?}", lp, pp);
    }

    /// The transformation removes every edge.
    #[test]
    fn transform_is_edgeless(a in pp_md(true), b in pp_md(true), c in pp_md(true)) {
        let m = build(&format!("{a}\n{b}\n{c}"));
        prop_assume!(md_graph(&m).is_acyclic());
        if let Ok(t) = non_interacting_transform(&m) {
            prop_assert!(md_graph(&t).edges.is_empty());
            prop_assert_eq!(classify(&m).unwrap().verdict, Verdict::Easy);
        }
    }
}
