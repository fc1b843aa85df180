//! Worked MD sets and instances shared by the test suites.
#![allow(dead_code)]

use mdchase_core::{parse_mds, parse_schema, Instance, MdSet, Schema};

pub struct Fixture {
    pub schema: &'static str,
    pub mds: &'static str,
}

impl Fixture {
    pub fn schema(&self) -> Schema {
        parse_schema(self.schema).unwrap()
    }

    pub fn set(&self) -> MdSet {
        parse_mds(self.mds, &self.schema()).unwrap()
    }

    pub fn instance(&self, rows: &[(&str, &str, &[&str])]) -> Instance {
        Instance::from_rows(&self.schema(), rows.iter().map(|(r, t, v)| (*r, *t, v.to_vec()))).unwrap()
    }
}

/// One MD read as the FD A -> B.
pub const FD: Fixture = Fixture { schema: "R(A, B)", mds: "R[A] ~eq R[A] -> R[B] := R[B]" };
pub const FD_ROWS: &[(&str, &str, &[&str])] = &[("R", "t1", &["a", "b"]), ("R", "t2", &["a", "c"])];

/// A -> B followed by B -> C over one relation.
pub const CHAIN: Fixture = Fixture {
    schema: "R(A, B, C)",
    mds: "R[A] ~eq R[A] -> R[B] := R[B]\nR[B] ~eq R[B] -> R[C] := R[C]",
};
pub const CHAIN_ROWS: &[(&str, &str, &[&str])] =
    &[("R", "t1", &["a", "b", "d"]), ("R", "t2", &["a", "c", "e"]), ("R", "t3", &["a", "b", "e"])];
pub const CHAIN_RESOLVED_D: &[(&str, &str, &[&str])] =
    &[("R", "t1", &["a", "b", "d"]), ("R", "t2", &["a", "b", "d"]), ("R", "t3", &["a", "b", "d"])];
pub const CHAIN_RESOLVED_E: &[(&str, &str, &[&str])] =
    &[("R", "t1", &["a", "b", "e"]), ("R", "t2", &["a", "b", "e"]), ("R", "t3", &["a", "b", "e"])];
/// Two A-groups whose B merges may accidentally coincide.
pub const ACCIDENTAL_ROWS: &[(&str, &str, &[&str])] = &[
    ("R", "t1", &["a", "m", "e"]),
    ("R", "t2", &["a", "d", "f"]),
    ("R", "t3", &["b", "c", "g"]),
    ("R", "t4", &["b", "k", "h"]),
];
pub const ACCIDENTAL_ROWS_3: &[(&str, &str, &[&str])] = &[
    ("R", "t1", &["a", "m", "e"]),
    ("R", "t2", &["a", "d", "f"]),
    ("R", "t3", &["b", "c", "g"]),
    ("R", "t4", &["b", "k", "h"]),
    ("R", "t5", &["x", "p", "i"]),
    ("R", "t6", &["x", "q", "j"]),
];

/// Two MDs feeding each other.
pub const SWAP: Fixture = Fixture {
    schema: "R(A, B)",
    mds: "m1: R[A] ~eq R[A] -> R[B] := R[B]\nm2: R[B] ~eq R[B] -> R[A] := R[A]",
};
pub const SWAP_ROWS: &[(&str, &str, &[&str])] = &[
    ("R", "t1", &["a", "c"]),
    ("R", "t2", &["b", "c"]),
    ("R", "t3", &["b", "d"]),
    ("R", "t4", &["a", "d"]),
];

/// Acyclic, but the attribute closure adds a back edge.
pub const CLOSURE_CYCLE: Fixture = Fixture {
    schema: "R(F, A, C, I)\nS(G, H, B, E)",
    mds: "m1: R[F] ~eq S[G] -> R[A] := S[H]\nm2: R[A] ~eq S[B] -> R[C] := S[E]\nm3: R[C] ~eq S[E] -> R[I] := S[H]",
};

pub const COMPONENTS: Fixture = Fixture {
    schema: "R(A, E, G)\nS(B, C, F, H)",
    mds: "R[A] ~eq S[B] & R[A] ~eq S[C] -> R[E] := S[F] & R[G] := S[H]",
};

pub const BOUNDED_ES: Fixture = Fixture {
    schema: "R(A, C, F, H, I, M)\nS(B, D, E, G, N)",
    mds: "m1: R[A] ~eq S[B] -> R[C] := S[D] & R[C] := S[E] & R[F] := S[G] & R[H] := S[G]\n\
          m2: R[F] ~eq S[E] & R[I] ~eq S[E] & R[A] ~eq S[E] & R[F] ~eq S[B] -> R[M] := S[N]",
};

/// The simplest hard two-relation linear pair.
pub const HARD_PAIR: Fixture = Fixture {
    schema: "R(A, C, E)\nS(B, D, F)",
    mds: "m1: R[A] ~eq S[B] -> R[C] := S[D]\nm2: R[C] ~eq S[D] -> R[E] := S[F]",
};

pub const THREE_RELATIONS: Fixture = Fixture {
    schema: "R(A, C, F)\nS(B, E)\nP(B, G)",
    mds: "m1: R[A] ~eq S[B] -> R[C] := S[E]\nm2: R[C] ~eq P[B] -> R[F] := P[G]",
};

pub const LABELED_HARD: Fixture = Fixture {
    schema: "R(A, B, C, E, F, G, H, I, J, K, L)",
    mds: "m1: R[A] ~eq R[B] & R[C] ~eq R[E] -> R[F] := R[G] & R[B] := R[G]\n\
          m2: R[G] ~eq R[H] & R[B] ~eq R[I] & R[L] ~eq R[I] -> R[J] := R[K]",
};

/// LHS(m1) contained in LHS(m2).
pub const INCLUDED: Fixture = Fixture {
    schema: "R(A, B, C)",
    mds: "m1: R[A] ~eq R[A] -> R[B] := R[B]\nm2: R[A] ~eq R[A] & R[B] ~eq R[B] -> R[C] := R[C]",
};

/// Easy for transitive operators, hard for some others.
pub const CROSSED: Fixture = Fixture {
    schema: "R(A, E, G, I)\nS(B, F, H, J)",
    mds: "m1: R[A] ~eq S[B] & R[I] ~eq S[J] -> R[E] := S[F]\n\
          m2: R[E] ~eq S[F] & R[A] ~eq S[J] & R[I] ~eq S[B] -> R[G] := S[H]",
};
pub const CROSSED_BITS: Fixture = Fixture {
    schema: "R(A:bits, E:bits, G:bits, I:bits)\nS(B:bits, F:bits, H:bits, J:bits)",
    mds: "m1: R[A] ~bitshare S[B] & R[I] ~bitshare S[J] -> R[E] := S[F]\n\
          m2: R[E] ~bitshare S[F] & R[A] ~bitshare S[J] & R[I] ~bitshare S[B] -> R[G] := S[H]",
};

pub const RECURSIVE: Fixture = Fixture {
    schema: "R(I, A, C, G)\nS(J, E, B, H)",
    mds: "m1: R[I] ~eq S[J] -> R[A] := S[E]\nm2: R[A] ~eq S[E] -> R[C] := S[B]\nm3: R[G] ~eq S[H] -> R[I] := S[J]",
};

pub const GUARDED: Fixture = Fixture {
    schema: "R(G, I, A, C)\nS(H, J, E, B)",
    mds: "m1: R[G] ~eq S[H] -> R[I] := S[J]\n\
          m2: R[G] ~eq S[H] & R[I] ~eq S[J] -> R[A] := S[E]\n\
          m3: R[G] ~eq S[H] & R[A] ~eq S[E] -> R[C] := S[B]",
};

pub const UNDECIDED: Fixture = Fixture {
    schema: "R(E, B, C)",
    mds: "m1: R[E] ~eq R[E] -> R[B] := R[B]\nm2: R[B] ~eq R[B] -> R[C] := R[C]\nm3: R[E] ~eq R[E] -> R[C] := R[C]",
};
