use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdchase")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn model_args(dir: &str) -> Vec<String> {
    let (s, m) = (data(&format!("{dir}/schema.txt")), data(&format!("{dir}/mds.txt")));
    vec!["--schema".into(), arg(&s).into(), "--mds".into(), arg(&m).into()]
}

fn chain_args(cmd: &str) -> Vec<String> {
    let mut v = vec![cmd.to_string()];
    v.extend(model_args("chain"));
    v.extend(["--data".into(), arg(&data("chain/data.csv")).into()]);
    v.extend(["--query".into(), arg(&data("chain/query.txt")).into()]);
    v
}

fn run_owned(args: &[String]) -> Output {
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn hard_pair_classifies_hard() {
    let mut args = vec!["classify".to_string()];
    args.extend(model_args("hard_pair"));
    let out = run_owned(&args);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["verdict"], "Hard");
    assert_eq!(r["command"]["name"], "classify");
}

#[test]
fn undecided_set_exits_two() {
    let mut args = vec!["classify".to_string()];
    args.extend(model_args("undecided"));
    let out = run_owned(&args);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["result"]["verdict"], "Unknown");
}

#[test]
fn chain_has_one_minimal_repair() {
    let out = run_owned(&chain_args("mris"));
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["count"], 1);
    assert_eq!(r["result"]["min_changes"], 2);
}

#[test]
fn candidate_membership() {
    let mut args = chain_args("answer");
    args.extend(["--candidate".into(), "a,b,e".into()]);
    let r = json(&run_owned(&args));
    assert_eq!(r["result"]["member"], true);
    args.pop();
    args.push("a,b,d".into());
    assert_eq!(json(&run_owned(&args))["result"]["member"], false);
}

#[test]
fn csv_output_lists_tuples() {
    let mut args = chain_args("mris");
    args.extend(["--format".into(), "csv".into()]);
    let out = run_owned(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.ends_with("R,t1,a,b,e")), "{text}");
}

#[test]
fn input_errors_exit_one() {
    let out = run(&["classify", "--schema", "/nonexistent/schema.txt", "--mds", "/nonexistent/mds.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let mut args = vec!["mris".to_string()];
    args.extend(model_args("chain"));
    args.extend(["--data".into(), arg(&data("cs.json")).into()]);
    assert_eq!(run_owned(&args).status.code(), Some(1));
}

#[test]
fn budget_exhaustion_exits_three() {
    let mut args = chain_args("mris");
    args.extend(["--max-branches".into(), "1".into()]);
    assert_eq!(run_owned(&args).status.code(), Some(3));
    let mut args = chain_args("answer");
    args.extend(["--max-steps".into(), "1".into()]);
    assert_eq!(run_owned(&args).status.code(), Some(3));
}

#[test]
fn reduction_bundle_round_trip() {
    let out_dir = std::env::temp_dir().join(format!("mdchase-bundle-{}", std::process::id()));
    let cs = data("cs.json");
    let out = run(&["reduce", "--cs", arg(&cs), "--out", arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(0));
    let candidate: Vec<String> = serde_json::from_value(json(&out)["result"]["candidate"].clone()).unwrap();
    let verify = json(&run(&["verify-reduction", "--cs", arg(&cs), "--construction", "case1a"]));
    assert_eq!(verify["result"]["all_hold"], true);
    let want = &verify["result"]["rows"][0]["verification"]["resolved_answer"];
    // The written files reproduce the verified answer.
    let f = |n: &str| out_dir.join(n).to_str().unwrap().to_string();
    let answer = run(&[
        "answer",
        "--schema",
        &f("schema.txt"),
        "--mds",
        &f("mds.txt"),
        "--data",
        &f("data.csv"),
        "--query",
        &f("query.txt"),
        "--candidate",
        &candidate.join(","),
    ]);
    assert_eq!(&json(&answer)["result"]["member"], want);
    std::fs::remove_dir_all(&out_dir).ok();
}

#[test]
fn verification_grid() {
    let out = run(&["verify-reduction", "--grid", "2", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["failures"], 0);
    assert_eq!(r["result"]["checked"], 2);
}

#[test]
fn reports_are_byte_identical() {
    for cmd in ["analyze", "classify", "chase", "mris", "answer", "check-query"] {
        let args = chain_args(cmd);
        let (a, b) = (run_owned(&args), run_owned(&args));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
        assert_eq!(a.status.code(), b.status.code());
    }
}
