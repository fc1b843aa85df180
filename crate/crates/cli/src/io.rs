//! Reading and writing schemas, MD sets, queries, instances and Cover
//! Subset instances.
//!
//! Instances come as CSV (`relation,tid,value,...` per row, no header) or as
//! JSON (`{"R": [{"tid": "t1", "values": ["a", "b"]}]}`), chosen by file
//! extension.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mdchase_core::reduce::CoverSubsetInstance;
use mdchase_core::{parse_mds, parse_query, parse_schema, ConjunctiveQuery, Instance, MdSet, Schema, Tuple};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: mdchase_core::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, IoError>;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| IoError::Write { path: path.into(), source })
}

fn model<T>(path: &Path, r: mdchase_core::Result<T>) -> Result<T> {
    r.map_err(|source| IoError::Model { path: path.into(), source })
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    model(path, parse_schema(&read_text(path)?))
}

pub fn load_mds(path: &Path, schema: &Schema) -> Result<MdSet> {
    model(path, parse_mds(&read_text(path)?, schema))
}

pub fn load_query(path: &Path, schema: &Schema) -> Result<ConjunctiveQuery> {
    model(path, parse_query(&read_text(path)?, schema))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load_instance(path: &Path, schema: &Schema) -> Result<Instance> {
    if is_json(path) {
        let map: BTreeMap<String, Vec<Tuple>> = serde_json::from_str(&read_text(path)?)
            .map_err(|source| IoError::Json { path: path.into(), source })?;
        let mut d = Instance::empty(schema);
        for (rel, tuples) in map {
            for t in tuples {
                model(path, d.insert(&rel, &t.tid, t.values))?;
            }
        }
        return Ok(d);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| IoError::Csv { path: path.into(), source })?;
    let mut d = Instance::empty(schema);
    for record in reader.records() {
        let record = record.map_err(|source| IoError::Csv { path: path.into(), source })?;
        if record.len() < 2 {
            let line = record.position().map_or(0, |p| p.line());
            return Err(IoError::Format { path: path.into(), message: format!("line {line}: need relation and tid") });
        }
        let values = record.iter().skip(2).map(String::from).collect();
        model(path, d.insert(&record[0], &record[1], values))?;
    }
    Ok(d)
}

pub fn instance_to_csv(d: &Instance) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for rel in d.schema().relations() {
        for t in d.tuples(&rel.name) {
            let mut row = vec![rel.name.as_str(), t.tid.as_str()];
            row.extend(t.values.iter().map(String::as_str));
            w.write_record(&row).expect("writing to memory");
        }
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV of UTF-8 input")
}

pub fn save_instance(path: &Path, d: &Instance) -> Result<()> {
    if is_json(path) {
        let text = serde_json::to_string_pretty(&d.to_map()).expect("tuples serialize");
        return write_text(path, &text);
    }
    write_text(path, &instance_to_csv(d))
}

pub fn load_cs(path: &Path) -> Result<CoverSubsetInstance> {
    let cs: CoverSubsetInstance =
        serde_json::from_str(&read_text(path)?).map_err(|source| IoError::Json { path: path.into(), source })?;
    model(path, cs.validate())?;
    Ok(cs)
}

/// Splits `"v1,v2,..."` honoring CSV quoting.
pub fn parse_candidate(text: &str) -> std::result::Result<Vec<String>, csv::Error> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    match r.records().next() {
        Some(rec) => Ok(rec?.iter().map(String::from).collect()),
        None => Ok(Vec::new()),
    }
}
