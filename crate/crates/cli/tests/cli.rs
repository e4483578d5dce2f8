use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_varma-causal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn model(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

const VARMA: &str = r#"{"d": 2, "p": 1, "q": 1, "names": ["X", "Y"],
  "A": [[[0, 0], [0, 0]], [[0.5, 0], [0.3333333333333333, 0.5]]],
  "B": [[[0, 0.25], [0, 0]]],
  "gamma": [1, 1]}"#;

const VAR_INSTANT: &str = r#"{"d": 2, "p": 1, "q": 0, "names": ["X", "Y"],
  "A": [[[0, 0], [0.3333333333333333, 0]], [[0.5, 0], [0, 0.5]]],
  "gamma": [1, 1]}"#;

const UNIT_ROOT: &str = r#"{"d": 1, "p": 1, "q": 0, "A": [[[0]], [[1.0]]], "gamma": [1]}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_success_and_unit_roots() {
    let dir = TempDir::new().unwrap();
    let ok = model(&dir, "ok.json", VARMA);
    let v = stdout_json(&run(&["validate", "-m", s(&ok)]));
    assert_eq!(v["passed"], true);

    let bad = model(&dir, "bad.json", UNIT_ROOT);
    let out = run(&["validate", "-m", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("spectral radius"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["separate", "-m", "x.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_one_and_no_backtrace() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VARMA);
    let out = run(&["effect", "-m", s(&m), "--y", "Z@0", "--x", "X@-1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("unknown component"), "{err}");
    assert!(!err.contains("panicked"));

    let out = run(&["validate", "-m", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn population_iv_on_worked_example() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VARMA);
    let v = stdout_json(&run(&["iv", "-m", s(&m), "--y", "Y@0", "--x", "X@-1,Y@-1", "--i", "X@-2", "--i", "Y@-2"]));
    let beta: Vec<f64> = serde_json::from_value(v["beta_hat"].clone()).unwrap();
    assert!((beta[0] - 1.0 / 3.0).abs() < 1e-9 && (beta[1] - 0.5).abs() < 1e-9, "{beta:?}");
    assert_eq!(v["sample_size"], "population");
    assert_eq!(v["conditions"]["all_hold"], true);
    assert_eq!(v["sets"]["x"], serde_json::json!(["X@-1", "Y@-1"]));
}

#[test]
fn under_identified_iv_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VARMA);
    let out = run(&["iv", "-m", s(&m), "--y", "Y@0", "--x", "X@-1,Y@-1", "--i", "X@-2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("under-identified"));
}

#[test]
fn separation_verdicts() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VAR_INSTANT);
    let v = stdout_json(&run(&["separate", "-m", s(&m), "--a", "Y@0", "--b", "X@0,Y@-1", "--c", "X@-1"]));
    assert_eq!(v["verdict"], "separated");
    assert!(v["witness"].is_null());

    let v = stdout_json(&run(&["separate", "-m", s(&m), "--a", "Y@0", "--b", "X@0", "--c", "X@-1"]));
    assert_eq!(v["verdict"], "connected");
    let text = v["witness"]["text"].as_str().unwrap();
    assert!(text.contains("Y@-1"), "{text}");
}

#[test]
fn effect_prints_beta() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VAR_INSTANT);
    let v = stdout_json(&run(&["effect", "-m", s(&m), "--y", "Y@0", "--x", "X@-1"]));
    // X_{t-1} -> X_t -> Y_t and X_{t-1} -> Y_{t-1} -> Y_t, each ½·⅓
    let b = v["beta"][0].as_f64().unwrap();
    assert!((b - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn graph_writes_dot_and_json() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VARMA);
    let dot = dir.path().join("g.dot");
    let js = dir.path().join("g.json");
    let v = stdout_json(&run(&["graph", "-m", s(&m), "--window", "-2:0", "--marginalize", "-o", s(&dot), "--json", s(&js)]));
    assert_eq!(v["nodes"], 6);
    assert!(v["bidirected_edges"].as_u64().unwrap() > 0);
    let text = fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph") && text.contains("\"X@-1\" -> \"Y@0\""), "{text}");
    let g: Value = serde_json::from_str(&fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 6);
}

#[test]
fn simulated_series_feeds_data_mode_iv() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VARMA);
    let csv = dir.path().join("s.csv");
    stdout_json(&run(&["simulate", "-m", s(&m), "-n", "50000", "--seed", "7", "-o", s(&csv)]));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("X,Y\n"));
    assert_eq!(text.lines().count(), 50_001);

    // same seed, same file
    let again = dir.path().join("t.csv");
    stdout_json(&run(&["simulate", "-m", s(&m), "-n", "50000", "--seed", "7", "-o", s(&again)]));
    assert_eq!(text, fs::read_to_string(&again).unwrap());

    let w = dir.path().join("w.json");
    fs::write(&w, "[[2, 0.5], [0.5, 1]]").unwrap();
    let v = stdout_json(&run(&[
        "iv", "--data", s(&csv), "--y", "Y@0", "--x", "X@-1,Y@-1", "--i", "X@-2,Y@-2", "--weight", s(&w),
    ]));
    let beta: Vec<f64> = serde_json::from_value(v["beta_hat"].clone()).unwrap();
    assert!((beta[0] - 1.0 / 3.0).abs() < 0.05 && (beta[1] - 0.5).abs() < 0.05, "{beta:?}");
    assert_eq!(v["sample_size"], 49_998);
}

#[test]
fn experiment_writes_report_and_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let v = stdout_json(
        &bin()
            .env("VARMA_CAUSAL_THREADS", "1")
            .args(["experiment", "gmp", "--trials", "4", "--queries", "3", "--seed", "9", "-o", s(&out), "--csv", s(&csv)])
            .output()
            .unwrap(),
    );
    assert_eq!(v["trials"], 4);
    assert_eq!(v["violations"], 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["kind"], "gmp");
    let rows = fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(rows, 1 + v["queries"].as_u64().unwrap() as usize);
}

#[test]
fn printed_numbers_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "m.json", VARMA);
    let out = run(&["iv", "-m", s(&m), "--y", "Y@0", "--x", "X@-1,Y@-1", "--i", "X@-2,Y@-2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&v).unwrap();
    assert_eq!(text.trim_end(), again);
}
