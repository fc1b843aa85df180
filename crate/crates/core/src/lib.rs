//! Matching dependencies (MDs) for entity resolution.
//!
//! Static analysis and hardness classification of MD sets, a chase engine
//! producing (minimally) resolved instances, resolved answers to conjunctive
//! queries, and Cover-Subset reduction builders used to cross-check the
//! engine on hard instances.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod chase;
pub mod classify;
mod error;
pub mod instance;
pub mod model;
pub mod parse;
pub mod query;
pub mod reduce;
pub mod similarity;
mod unionfind;

pub use error::Error;
pub use instance::{Instance, Position, Tuple};
pub use model::{
    AttrRef, Attribute, ConjunctiveQuery, Label, MatchAtom, Md, MdSet, QueryAtom, Relation,
    Schema, SimAtom, Term,
};
pub use parse::{parse_mds, parse_query, parse_schema};
pub use similarity::{Registry, Similarity};

pub type Result<T, E = Error> = core::result::Result<T, E>;
