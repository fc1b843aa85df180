//! Subcommands, their JSON reports and the exit-code protocol.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdchase_core::analysis::{
    attribute_closure, augmented_md_graph, equivalent_sets, is_pair_preserving, linear_pair, lr_components, md_graph,
    strong_acyclicity,
};
use mdchase_core::chase::{
    enumerate_resolved, merge_classes, minimally_resolved, modifiable_positions, prop1_fastpath, Budget, ChaseConfig,
    Resolution,
};
use mdchase_core::classify::{classify, prop1_fastpath_applicable, Verdict};
use mdchase_core::query::{classify_query, is_resolved_answer, resolved_answers};
use mdchase_core::reduce::{
    build_case1a, build_prop2, enumerate_cs, verify_bundle, CoverSubsetInstance, ReductionBundle, Verification,
};
use mdchase_core::{parse_mds, parse_schema, Instance, MdSet, Schema};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{self, IoError};
use crate::runner::run_jobs;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Two-relation pair used by `reduce --construction case1a` when no MD file
/// is given.
pub const DEFAULT_HARD_PAIR_SCHEMA: &str = "R(A, C, E)\nS(B, D, F)";
pub const DEFAULT_HARD_PAIR: &str = "m1: R[A] ~ S[B] -> R[C] := S[D]\nm2: R[C] ~ S[D] -> R[E] := S[F]";

#[derive(Debug, Parser)]
#[command(name = "mdchase", version, about = "Matching-dependency analysis, chase and resolved query answering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Case1a,
    Prop2,
}

/// Options shared by every subcommand. The whole struct is echoed in each
/// report.
#[derive(Clone, Debug, Args, Serialize)]
pub struct RunConfig {
    /// Schema file: one `R(A, B:domain, ...)` per line.
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// MD file, one MD per line.
    #[arg(long, global = true)]
    pub mds: Option<PathBuf>,
    /// Instance file, `.csv` (relation,tid,values...) or `.json`.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Query file: `Q(x, z) :- exists y. R(x, y, z)`.
    #[arg(long, global = true)]
    pub query: Option<PathBuf>,
    /// Candidate answer tuple, comma separated.
    #[arg(long, global = true)]
    pub candidate: Option<String>,
    #[arg(long, global = true, default_value_t = Budget::default().max_steps)]
    pub max_steps: usize,
    #[arg(long, global = true, default_value_t = Budget::default().max_branches)]
    pub max_branches: usize,
    /// Cap on update values tried per merge class (inexact when it binds).
    #[arg(long, global = true)]
    pub max_candidate_values: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for grid jobs, 0 for all cores.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
}

impl RunConfig {
    pub fn chase_config(&self) -> ChaseConfig {
        ChaseConfig {
            budget: Budget { max_steps: self.max_steps, max_branches: self.max_branches },
            max_candidate_values: self.max_candidate_values,
            ..ChaseConfig::default()
        }
    }
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Graphs, attribute closure, components, equivalent sets.
    Analyze,
    /// Hard / easy / unknown verdict for the MD set.
    Classify,
    /// Every resolved instance reachable by the chase.
    Chase,
    /// Minimally resolved instances.
    Mris,
    /// Resolved answers, or membership of `--candidate`.
    Answer,
    /// Query class (UJCQ, CHAQ) relative to the MD set.
    CheckQuery,
    /// Build a resolved-answer instance from a Cover Subset instance.
    Reduce {
        #[arg(long)]
        cs: PathBuf,
        #[arg(long, value_enum, default_value_t = Construction::Case1a)]
        construction: Construction,
        /// Directory receiving schema.txt, mds.txt, data.csv, query.txt and
        /// bundle.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a construction against an independent Cover Subset solver.
    VerifyReduction {
        /// A single instance.
        #[arg(long, conflicts_with = "grid")]
        cs: Option<PathBuf>,
        #[arg(long, value_enum)]
        construction: Option<Construction>,
        /// Every instance with 2 <= n, m <= GRID elements and subsets.
        #[arg(long)]
        grid: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Classify => "classify",
            Command::Chase => "chase",
            Command::Mris => "mris",
            Command::Answer => "answer",
            Command::CheckQuery => "check-query",
            Command::Reduce { .. } => "reduce",
            Command::VerifyReduction { .. } => "verify-reduction",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] mdchase_core::Error),
    #[error("{0}")]
    Usage(String),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const UNKNOWN: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const VERIFICATION_FAILED: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(mdchase_core::Error::BudgetExhausted(_))
            | CliError::Io(IoError::Model { source: mdchase_core::Error::BudgetExhausted(_), .. }) => exit::BUDGET,
            _ => exit::INPUT,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub config: RunConfig,
    pub result: Value,
}

/// A finished run: the report and the exit status it maps to.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub code: i32,
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn load_schema_mds(cfg: &RunConfig) -> Result<(Schema, MdSet), CliError> {
    let schema = io::load_schema(need(&cfg.schema, "schema")?)?;
    let m = io::load_mds(need(&cfg.mds, "mds")?, &schema)?;
    Ok((schema, m))
}

fn instances(r: &Resolution) -> Value {
    json!(r.instances.iter().map(Instance::to_map).collect::<Vec<_>>())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Runs one command. Errors carry their own exit code.
pub fn run(command: Command, cfg: RunConfig) -> Result<Outcome, CliError> {
    let mut code = exit::OK;
    let result = match &command {
        Command::Analyze => analyze(&cfg)?,
        Command::Classify => {
            let (_, m) = load_schema_mds(&cfg)?;
            let c = classify(&m)?;
            if c.verdict == Verdict::Unknown {
                code = exit::UNKNOWN;
            }
            to_value(&c)
        }
        Command::Chase => {
            let (schema, m) = load_schema_mds(&cfg)?;
            let d = io::load_instance(need(&cfg.data, "data")?, &schema)?;
            let r = enumerate_resolved(&d, &m, cfg.chase_config())?;
            json!({
                "modifiable": modifiable_positions(&d, &m)?,
                "merge_classes": merge_classes(&d, &m)?,
                "resolved": instances(&r),
                "count": r.instances.len(),
                "min_changes": r.min_changes,
                "stats": r.stats,
            })
        }
        Command::Mris => {
            let (schema, m) = load_schema_mds(&cfg)?;
            let d = io::load_instance(need(&cfg.data, "data")?, &schema)?;
            let levels = prop1_fastpath_applicable(&m);
            let r = if levels { prop1_fastpath(&d, &m, cfg.chase_config())? } else { minimally_resolved(&d, &m, cfg.chase_config())? };
            json!({
                "route": if levels { "levels" } else { "search" },
                "mris": instances(&r),
                "count": r.instances.len(),
                "min_changes": r.min_changes,
                "stats": r.stats,
            })
        }
        Command::Answer => {
            let (schema, m) = load_schema_mds(&cfg)?;
            let d = io::load_instance(need(&cfg.data, "data")?, &schema)?;
            let q = io::load_query(need(&cfg.query, "query")?, &schema)?;
            match &cfg.candidate {
                Some(c) => {
                    let c = io::parse_candidate(c).map_err(|e| CliError::Usage(format!("--candidate: {e}")))?;
                    let r = is_resolved_answer(&q, &d, &m, &c, cfg.chase_config())?;
                    json!({ "candidate": c, "member": r.member, "min_changes": r.min_changes })
                }
                None => to_value(&resolved_answers(&q, &d, &m, cfg.chase_config())?),
            }
        }
        Command::CheckQuery => {
            let (schema, m) = load_schema_mds(&cfg)?;
            let q = io::load_query(need(&cfg.query, "query")?, &schema)?;
            to_value(&classify_query(&q, &m))
        }
        Command::Reduce { cs, construction, out } => {
            let cs = io::load_cs(cs)?;
            let bundle = build(&cfg, &cs, *construction)?;
            if let Some(dir) = out {
                write_bundle(dir, &bundle)?;
            }
            bundle_summary(&bundle, out.as_deref())
        }
        Command::VerifyReduction { cs, construction, grid } => {
            let (v, all) = verify(&cfg, cs.as_deref(), *construction, *grid)?;
            if !all {
                code = exit::VERIFICATION_FAILED;
            }
            v
        }
    };
    Ok(Outcome { report: Report { tool: TOOL, version: VERSION, command, config: cfg, result }, code })
}

fn analyze(cfg: &RunConfig) -> Result<Value, CliError> {
    let (_, m) = load_schema_mds(cfg)?;
    let show = |blocks: &[std::collections::BTreeSet<mdchase_core::AttrRef>]| -> Vec<Vec<String>> {
        blocks.iter().map(|b| b.iter().map(|a| a.to_string()).collect()).collect()
    };
    let components: Vec<Value> = m
        .mds()
        .iter()
        .map(|md| {
            let (l, r) = lr_components(md);
            json!({ "md": md.to_string(), "l": show(&l.blocks), "r": show(&r.blocks) })
        })
        .collect();
    let pair = if m.len() == 2 { linear_pair(&m)? } else { None };
    let es = match pair {
        Some(_) => Some(
            equivalent_sets(&m)?
                .into_iter()
                .map(|b| {
                    json!({
                        "relation": b.relation,
                        "superscript": b.superscript,
                        "attrs": b.attrs.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                        "bounded": b.bounded,
                    })
                })
                .collect::<Vec<_>>(),
        ),
        None => None,
    };
    Ok(json!({
        "mds": m.mds().iter().map(|md| md.to_string()).collect::<Vec<_>>(),
        "graph": md_graph(&m).edges,
        "augmented_graph": augmented_md_graph(&m).edges,
        "acyclic": md_graph(&m).is_acyclic(),
        "strong_acyclicity": strong_acyclicity(&m),
        "closure": show(&attribute_closure(&m).blocks),
        "components": components,
        "changeable": m.changeable().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "pair_preserving": is_pair_preserving(&m),
        "linear_pair": pair,
        "equivalent_sets": es,
    }))
}

fn build(cfg: &RunConfig, cs: &CoverSubsetInstance, c: Construction) -> Result<ReductionBundle, CliError> {
    Ok(match c {
        Construction::Prop2 => build_prop2(cs)?,
        Construction::Case1a => {
            let pair = match (&cfg.schema, &cfg.mds) {
                (Some(_), Some(_)) => load_schema_mds(cfg)?.1,
                (None, None) => default_hard_pair(),
                _ => return Err(CliError::Usage("give both --schema and --mds, or neither".into())),
            };
            build_case1a(cs, &pair)?
        }
    })
}

pub fn default_hard_pair() -> MdSet {
    let schema = parse_schema(DEFAULT_HARD_PAIR_SCHEMA).expect("fixed schema");
    parse_mds(DEFAULT_HARD_PAIR, &schema).expect("fixed MDs")
}

fn write_bundle(dir: &Path, b: &ReductionBundle) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.into(), source })?;
    io::write_text(&dir.join("schema.txt"), &b.mds.schema().to_string())?;
    io::write_text(&dir.join("mds.txt"), &b.mds.to_string())?;
    io::write_text(&dir.join("query.txt"), &format!("{}\n", b.query))?;
    io::save_instance(&dir.join("data.csv"), &b.instance)?;
    let meta = json!({ "cs": b.cs, "candidate": b.candidate, "values": b.values });
    io::write_text(&dir.join("bundle.json"), &serde_json::to_string_pretty(&meta).expect("bundle serializes"))?;
    Ok(())
}

fn bundle_summary(b: &ReductionBundle, out: Option<&Path>) -> Value {
    let tuples: BTreeMap<&str, usize> =
        b.mds.schema().relations().iter().map(|r| (r.name.as_str(), b.instance.tuples(&r.name).len())).collect();
    json!({
        "mds": b.mds.mds().iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "query": b.query.to_string(),
        "candidate": b.candidate,
        "tuples": tuples,
        "values": b.values,
        "out": out,
    })
}

#[derive(Debug, Serialize)]
struct GridRow {
    construction: Construction,
    cs: CoverSubsetInstance,
    verification: Option<Verification>,
    error: Option<String>,
}

fn verify(
    cfg: &RunConfig,
    cs: Option<&Path>,
    construction: Option<Construction>,
    grid: Option<usize>,
) -> Result<(Value, bool), CliError> {
    let constructions = match construction {
        Some(c) => vec![c],
        None => vec![Construction::Case1a, Construction::Prop2],
    };
    let instances: Vec<CoverSubsetInstance> = match (cs, grid) {
        (Some(p), None) => vec![io::load_cs(p)?],
        (None, Some(g)) => (2..=g).flat_map(|n| (2..=g).flat_map(move |m| enumerate_cs(n, m))).collect(),
        _ => return Err(CliError::Usage("give --cs or --grid".into())),
    };
    let jobs: Vec<(Construction, CoverSubsetInstance)> =
        constructions.iter().flat_map(|&c| instances.iter().map(move |i| (c, i.clone()))).collect();
    let rows = run_jobs(&jobs, cfg.threads, |_, (c, i)| {
        let r = build(cfg, i, *c).map_err(|e| e.to_string()).and_then(|b| {
            verify_bundle(&b, cfg.chase_config()).map_err(|e| e.to_string())
        });
        match r {
            Ok(v) => GridRow { construction: *c, cs: i.clone(), verification: Some(v), error: None },
            Err(e) => GridRow { construction: *c, cs: i.clone(), verification: None, error: Some(e) },
        }
    });
    let all = rows.iter().all(|r| r.verification.as_ref().is_some_and(|v| v.holds));
    let failures = rows.iter().filter(|r| !r.verification.as_ref().is_some_and(|v| v.holds)).count();
    Ok((json!({ "checked": rows.len(), "failures": failures, "all_hold": all, "rows": rows }), all))
}

/// Renders a report in the requested format.
pub fn render(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report).expect("reports serialize") + "\n"),
        Format::Text => {
            let mut out = format!("{} {} {}\n", report.tool, report.version, report.command.name());
            text(&report.result, 0, &mut out);
            Ok(out)
        }
        Format::Csv => csv_rows(report),
    }
}

fn text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::Object(_) | Value::Array(_) if !is_flat(x) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text(x, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", inline(x))),
                }
            }
        }
        Value::Array(xs) => {
            for x in xs {
                if is_flat(x) {
                    out.push_str(&format!("{pad}- {}\n", inline(x)));
                } else {
                    out.push_str(&format!("{pad}-\n"));
                    text(x, indent + 1, out);
                }
            }
        }
        x => out.push_str(&format!("{pad}{}\n", inline(x))),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(xs) => xs.iter().all(|x| !matches!(x, Value::Object(_) | Value::Array(_))),
        Value::Object(_) => false,
        _ => true,
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(xs) => format!("[{}]", xs.iter().map(inline).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

/// CSV output: instance rows (with an instance index) for `chase` and
/// `mris`, answer tuples for `answer`.
fn csv_rows(report: &Report) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let put = |w: &mut csv::Writer<Vec<u8>>, row: Vec<String>| w.write_record(&row).expect("writing to memory");
    let list = match report.command {
        Command::Chase => report.result.get("resolved"),
        Command::Mris => report.result.get("mris"),
        Command::Answer => {
            if let Some(answers) = report.result.get("answers").and_then(Value::as_array) {
                for a in answers {
                    put(&mut w, a.as_array().into_iter().flatten().map(inline).collect());
                }
            } else {
                put(&mut w, vec![report.result["member"].to_string()]);
            }
            None
        }
        _ => return Err(CliError::Usage(format!("csv output is not available for {}", report.command.name()))),
    };
    for (k, inst) in list.and_then(Value::as_array).into_iter().flatten().enumerate() {
        for (rel, tuples) in inst.as_object().into_iter().flatten() {
            for t in tuples.as_array().into_iter().flatten() {
                let mut row = vec![k.to_string(), rel.clone(), inline(&t["tid"])];
                row.extend(t["values"].as_array().into_iter().flatten().map(inline));
                put(&mut w, row);
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("writing to memory")).expect("UTF-8"))
}
