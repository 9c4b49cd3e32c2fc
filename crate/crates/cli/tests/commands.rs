use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fpcs-lab"));
    c.env_remove("FPCS_LAB_LOG");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn simulate_lists_breakpoints() {
    let f = scenario("two_queues.json");
    let out = run(&["simulate", f.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x_1,x_2,segment_id,kind");
    let times: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times.len(), 3);
    for (t, want) in times.iter().zip([0.0, 1.0, 3.0]) {
        assert!((t - want).abs() < 1e-12);
    }
}

#[test]
fn simulate_writes_both_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let f = scenario("two_queues_field.json");
    let mut bodies = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = run(&["simulate", f.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        bodies.push((
            std::fs::read(out_dir.join("trajectory.csv")).unwrap(),
            std::fs::read(out_dir.join("run.json")).unwrap(),
        ));
    }
    assert_eq!(bodies[0], bodies[1]);
    let csv = String::from_utf8(bodies[0].0.clone()).unwrap();
    assert!(csv.contains(",perturbed\n") && csv.contains(",jump\n"));
    let report: Value = serde_json::from_slice(&bodies[0].1).unwrap();
    assert!(report["sup_deviation"].as_f64().unwrap() > 0.0);
    assert!(report["ratio"].as_f64().is_some());
}

#[test]
fn empty_pieces_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", "{\n  \"version\": 1,\n  \"system\": { \"pieces\": [] }\n}\n");
    let out = run(&["simulate", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("s.json:3:"), "{err}");
}

#[test]
fn malformed_file_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", "{\"version\": 1,\n \"system\": {\"pieces\": [{\"mu\": [1], \"b\": }]}}");
    let out = run(&["analyze", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("s.json:2:"));
}

#[test]
fn analyze_example() {
    let f = scenario("two_queues.json");
    let v = json_of(&run(&["analyze", f.to_str().unwrap()]));
    assert_eq!(v["critical_points"], serde_json::json!([[0.0, 0.0]]));
    assert_eq!(v["cnc"], "inf");
    assert_eq!(v["D_C"], 0);
    let g = v["gamma_empirical"].as_f64().unwrap();
    assert!((1.0..=v["gamma_bound"].as_f64().unwrap()).contains(&g));
}

#[test]
fn analyze_single_piece() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"version":1,"system":{"pieces":[{"mu":[1,2],"b":0}]}}"#);
    let v = json_of(&run(&["analyze", f.to_str().unwrap()]));
    assert_eq!(v["critical_points"], serde_json::json!([]));
}

#[test]
fn constants_example() {
    let f = scenario("two_queues.json");
    let v = json_of(&run(&["constants", f.to_str().unwrap(), "--gamma", "1"]));
    assert_eq!(v["M"], 1);
    assert_eq!(v["D_C"], 0);
    assert_eq!(v["sigma"], 5);
    assert_eq!(v["eta"], 240);
    assert_eq!(v["kappa"], 1921);
}

#[test]
fn constants_single_piece() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"version":1,"system":{"pieces":[{"mu":[1,2],"b":0}]}}"#);
    assert_eq!(json_of(&run(&["constants", f.to_str().unwrap()]))["kappa"], 1);
}

#[test]
fn constants_over_budget_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let pieces: Vec<String> = (0..20)
        .map(|k| {
            let a = (k as f64 * 0.37).sin();
            let b = (k as f64 * 1.31).cos();
            let c = (k as f64 * 2.17).sin();
            format!(r#"{{"mu":[{a},{b},{c}],"b":{}}}"#, (k as f64 * 0.7).cos())
        })
        .collect();
    let body = format!(r#"{{"version":1,"system":{{"pieces":[{}]}}}}"#, pieces.join(","));
    let f = write(dir.path(), "s.json", &body);
    let out = run(&["constants", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json_of(&out)["error"], "ScaleLimit");
}

#[test]
fn sensitivity_reports_ratio_against_kappa() {
    let f = scenario("two_queues_bernoulli.json");
    let args = ["sensitivity", f.to_str().unwrap(), "--runs", "50", "--seed", "3"];
    let a = run(&args);
    assert!(a.status.success());
    let v = json_of(&a);
    assert_eq!(v["kappa"], 1921);
    assert_eq!(v["within_kappa"], true);
    assert!(v["max_ratio"].as_f64().unwrap() <= 1921.0);
    assert_eq!(v["per_run"].as_array().unwrap().len(), 50);
    assert_eq!(a.stdout, run(&args).stdout);
    let one = run(&["sensitivity", f.to_str().unwrap(), "--runs", "50", "--seed", "3", "--jobs", "1"]);
    assert_eq!(a.stdout, one.stdout);
}

#[test]
fn sensitivity_without_perturbation() {
    let f = scenario("two_queues.json");
    let v = json_of(&run(&["sensitivity", f.to_str().unwrap(), "--runs", "3"]));
    assert_eq!(v["ratio"], Value::Null);
    assert_eq!(v["max_sup_deviation"], 0.0);
    assert_eq!(v["zero_perturbation_runs"], 3);
}

#[test]
fn sensitivity_growth_csv() {
    let f = scenario("two_queues_bernoulli.json");
    let out = run(&["sensitivity", f.to_str().unwrap(), "--runs", "5", "--format", "csv"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("t,max_sup_deviation,"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn verify_suites() {
    let out = run(&["verify", "--suite", "lemma2", "--runs", "100"]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["passed"], true);
    let out = run(&["verify", "--suite", "nonexpansive", "--runs", "10"]);
    assert!(out.status.success());
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn missing_initial_state_for_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"version":1,"system":{"pieces":[{"mu":[1],"b":0}]}}"#);
    assert_eq!(run(&["simulate", f.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn csv_only_where_available() {
    let f = scenario("two_queues.json");
    assert_eq!(run(&["constants", f.to_str().unwrap(), "--format", "csv"]).status.code(), Some(2));
}
