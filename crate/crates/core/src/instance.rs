//! Relational instances with opaque tuple identifiers.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::Schema;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tuple {
    pub tid: String,
    pub values: Vec<String>,
}

/// A cell of an instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Position {
    pub relation: String,
    pub tid: String,
    pub attribute: String,
}

impl Position {
    pub fn new(relation: &str, tid: &str, attribute: &str) -> Self {
        Position { relation: relation.to_owned(), tid: tid.to_owned(), attribute: attribute.to_owned() }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.relation, self.tid, self.attribute)
    }
}

/// Tuples per relation, kept in insertion order. Every relation of the
/// schema is present, possibly empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    schema: Schema,
    relations: Vec<Vec<Tuple>>,
}

impl Instance {
    pub fn empty(schema: &Schema) -> Self {
        Instance { schema: schema.clone(), relations: alloc::vec![Vec::new(); schema.relations().len()] }
    }

    /// Builds an instance from `(relation, tid, values)` rows.
    pub fn from_rows<'a, I>(schema: &Schema, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, Vec<&'a str>)>,
    {
        let mut d = Instance::empty(schema);
        for (rel, tid, values) in rows {
            d.insert(rel, tid, values.into_iter().map(String::from).collect())?;
        }
        Ok(d)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn insert(&mut self, relation: &str, tid: &str, values: Vec<String>) -> Result<()> {
        let idx = self
            .schema
            .relation_index(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.to_owned()))?;
        let arity = self.schema.relations()[idx].arity();
        if values.len() != arity {
            return Err(Error::ArityMismatch { relation: relation.to_owned(), expected: arity, found: values.len() });
        }
        if self.relations[idx].iter().any(|t| t.tid == tid) {
            return Err(Error::DuplicateTid { relation: relation.to_owned(), tid: tid.to_owned() });
        }
        self.relations[idx].push(Tuple { tid: tid.to_owned(), values });
        Ok(())
    }

    /// Removes the tuple `tid` from `relation`, returning it.
    pub fn remove(&mut self, relation: &str, tid: &str) -> Option<Tuple> {
        let idx = self.schema.relation_index(relation)?;
        let at = self.relations[idx].iter().position(|t| t.tid == tid)?;
        Some(self.relations[idx].remove(at))
    }

    /// Tuples of relation number `idx` in schema order.
    pub fn tuples_at(&self, idx: usize) -> &[Tuple] {
        &self.relations[idx]
    }

    pub fn tuples(&self, relation: &str) -> &[Tuple] {
        match self.schema.relation_index(relation) {
            Some(i) => &self.relations[i],
            None => &[],
        }
    }

    pub(crate) fn tuples_at_mut(&mut self, idx: usize) -> &mut Vec<Tuple> {
        &mut self.relations[idx]
    }

    pub fn len(&self) -> usize {
        self.relations.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, p: &Position) -> Option<&str> {
        let ri = self.schema.relation_index(&p.relation)?;
        let ai = self.schema.relations()[ri].index_of(&p.attribute)?;
        self.relations[ri].iter().find(|t| t.tid == p.tid).map(|t| t.values[ai].as_str())
    }

    pub fn set(&mut self, p: &Position, value: &str) -> Result<()> {
        let ri = self
            .schema
            .relation_index(&p.relation)
            .ok_or_else(|| Error::UnknownRelation(p.relation.clone()))?;
        let ai = self.schema.relations()[ri].index_of(&p.attribute).ok_or_else(|| Error::UnknownAttribute {
            relation: p.relation.clone(),
            attribute: p.attribute.clone(),
        })?;
        let t = self.relations[ri]
            .iter_mut()
            .find(|t| t.tid == p.tid)
            .ok_or_else(|| Error::Precondition(alloc::format!("no tuple {}", p.tid)))?;
        t.values[ai] = value.to_owned();
        Ok(())
    }

    /// Every position, relation by relation, tuple by tuple, in attribute order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        for (ri, rel) in self.schema.relations().iter().enumerate() {
            for t in &self.relations[ri] {
                for a in &rel.attributes {
                    out.push(Position::new(&rel.name, &t.tid, &a.name));
                }
            }
        }
        out
    }

    /// Positions whose values differ from `other` (same tuples assumed).
    pub fn diff(&self, other: &Instance) -> Vec<Position> {
        self.positions()
            .into_iter()
            .filter(|p| self.get(p) != other.get(p))
            .collect()
    }

    /// Number of positions whose values differ from `original`.
    pub fn change_count(&self, original: &Instance) -> usize {
        self.diff(original).len()
    }

    /// Whether both instances have the same tids per relation.
    pub fn same_tuples(&self, other: &Instance) -> bool {
        self.schema == other.schema
            && self.relations.iter().zip(&other.relations).all(|(a, b)| {
                let x: BTreeSet<&str> = a.iter().map(|t| t.tid.as_str()).collect();
                let y: BTreeSet<&str> = b.iter().map(|t| t.tid.as_str()).collect();
                x == y && a.len() == b.len()
            })
    }

    /// Active domain of one column.
    pub fn column_values(&self, relation: &str, attribute: &str) -> BTreeSet<&str> {
        let Some(ri) = self.schema.relation_index(relation) else { return BTreeSet::new() };
        let Some(ai) = self.schema.relations()[ri].index_of(attribute) else { return BTreeSet::new() };
        self.relations[ri].iter().map(|t| t.values[ai].as_str()).collect()
    }

    /// Sorted `(relation, tid, values)` rows, the canonical serialization used
    /// for ordering and deduplication.
    pub fn canonical(&self) -> Vec<(String, Vec<Tuple>)> {
        self.schema
            .relations()
            .iter()
            .zip(&self.relations)
            .map(|(r, ts)| {
                let mut ts = ts.clone();
                ts.sort();
                (r.name.clone(), ts)
            })
            .collect()
    }

    /// Relation name to its rows, sorted by tid.
    pub fn to_map(&self) -> BTreeMap<String, Vec<Tuple>> {
        self.canonical().into_iter().collect()
    }
}

/// Read access to relation rows by index, shared by instances and chase states.
pub trait Facts {
    fn schema(&self) -> &Schema;
    fn row_count(&self, relation: usize) -> usize;
    fn value(&self, relation: usize, row: usize, attribute: usize) -> &str;
}

impl Facts for Instance {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn row_count(&self, relation: usize) -> usize {
        self.relations[relation].len()
    }

    fn value(&self, relation: usize, row: usize, attribute: usize) -> &str {
        &self.relations[relation][row].values[attribute]
    }
}

impl PartialOrd for Instance {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Instance {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.canonical().cmp(&other.canonical())
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ri, rel) in self.schema.relations().iter().enumerate() {
            if self.relations[ri].is_empty() {
                continue;
            }
            let names: Vec<&str> = rel.attributes.iter().map(|a| a.name.as_str()).collect();
            writeln!(f, "{} | {}", rel.name, names.join(" "))?;
            for t in &self.relations[ri] {
                writeln!(f, "  {} | {}", t.tid, t.values.join(" "))?;
            }
        }
        Ok(())
    }
}
