use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_qrwt");

fn run(args: &[&str], config: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn every_subcommand_passes_on_the_reference_experiment() {
    let dir = TempDir::new().unwrap();
    for sub in ["gns", "noise-count", "limit-gen", "check-hp", "simulate", "converge", "lindblad", "example-c3"] {
        let out = run(&[sub], None, dir.path());
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", stderr(&out));
        assert_eq!(report(&out)["passed"], Value::Bool(true), "{sub}");
        assert!(dir.path().join("out").join(format!("{sub}.json")).exists());
    }
    let csv = std::fs::read_to_string(dir.path().join("out/converge.csv")).unwrap();
    assert!(csv.starts_with("tau,t,re,im,abs_err"));
    assert_eq!(csv.lines().count(), 1 + 8);
}

#[test]
fn noise_bound_for_three_levels() {
    let dir = TempDir::new().unwrap();
    let out = run(&["noise-count"], Some(r#"{"noise": {"n": 3, "k": 2, "l": 2, "expected": 12}}"#), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(report(&out)["bound"], 12);

    let out = run(&["noise-count"], Some(r#"{"noise": {"n": 3, "k": 2, "l": 2, "expected": 13}}"#), dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn three_level_example_counts_ten_noises() {
    let dir = TempDir::new().unwrap();
    for seed in ["1", "2", "3"] {
        let out = run(&["example-c3", "--seed", seed], None, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let r = report(&out);
        assert_eq!(r["noise_count"], 10);
        assert_eq!(r["noise_bound"], 12);
        assert!(r["f_entry_residual"].as_f64().unwrap() <= 1e-10);
    }
    let config = r#"{"example_c3": {"lambda1": 0.4,
        "b": [[1, 0], [0, -1]], "c": [[0.5, [0, 0.2]], [[0, -0.2], 0]],
        "g": [[0.3, 0.1], [0, [0, 0.4]]], "l": [[0.2, 0], [0.1, 0.3]],
        "m": [[0, [0.1, 0.1]], [0.2, 0]], "h": [[0.7, 0.1], [0.1, -0.2]]}}"#;
    let out = run(&["example-c3"], Some(config), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(report(&out)["noise_count"], 10);
}

#[test]
fn trivial_walk_with_zero_test_functions_is_flat() {
    let dir = TempDir::new().unwrap();
    let zero = r#"{"breakpoints": [0, 1], "values": [[0, 0, 0, 0, 0]]}"#;
    let config = format!(r#"{{"generator": {{"type": "trivial"}}, "f": {zero}, "g": {zero}}}"#);
    let out = run(&["converge"], Some(&config), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = &report(&out)["matrix_elements"][0]["summary"];
    assert_eq!(summary["flat"], Value::Bool(true));
    assert_eq!(summary["slope"], Value::Null);
    assert!(summary["errors"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() <= 1e-12));
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"generator": {"type": "random-hamiltonian", "conjugation": true, "with_r": true}, "times": [0.5, 1.0], "seed": 9}"#;
    let first = run(&["converge"], Some(config), dir.path());
    let csv_first = std::fs::read(dir.path().join("out/converge.csv")).unwrap();
    let second = Command::new(BIN)
        .args(["converge", "--config"])
        .arg(dir.path().join("config.json"))
        .arg("--out")
        .arg(dir.path().join("again"))
        .env("QRWT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(csv_first, std::fs::read(dir.path().join("again/converge.csv")).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("out/converge.json")).unwrap(),
        std::fs::read(dir.path().join("again/converge.json")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = TempDir::new().unwrap();
    let a = run(&["check-hp", "--seed", "5"], Some(r#"{"seed": 1}"#), dir.path());
    let b = run(&["check-hp"], Some(r#"{"seed": 5}"#), dir.path());
    let c = run(&["check-hp"], Some(r#"{"seed": 1}"#), dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("{not json", "JSON"),
        (r#"{"observable": [[1, 0, 0], [0, 1, 0]]}"#, "observable"),
        (r#"{"taus": [0.1, 0.2]}"#, "taus"),
        (r#"{"rho": [[0.5, 0], [0, 0.6]]}"#, "rho"),
        (r#"{"blocks": [[1], [1]]}"#, "blocks"),
        (r#"{"oracle_steps": 4}"#, "oracle_steps"),
        (r#"{"unknown_field": 1}"#, "unknown"),
        (r#"{"example_c3": {"lambda1": 1.5}}"#, "lambda1"),
    ];
    for (config, needle) in cases {
        let out = run(&["simulate"], Some(config), dir.path());
        assert_eq!(out.status.code(), Some(2), "{config}");
        assert!(stderr(&out).contains(needle), "{config}: {}", stderr(&out));
    }
    let raw = r#"{"generator": {"type": "raw-f", "f": [[1, 0], [0, 1]]}}"#;
    let out = run(&["check-hp"], Some(raw), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("generator.f"));
}

#[test]
fn failed_certifications_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let mut rows = Vec::new();
    for i in 0..6 {
        let row: Vec<String> = (0..6).map(|j| format!("[{}, {}]", 0.1 * (i + 2 * j) as f64, 0.05 * (i as f64 - j as f64))).collect();
        rows.push(format!("[{}]", row.join(", ")));
    }
    let raw = format!(r#"{{"generator": {{"type": "raw-f", "f": [{}]}}}}"#, rows.join(", "));
    let out = run(&["check-hp"], Some(&raw), dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert_eq!(report(&out)["report"]["unitary"], Value::Bool(false));

    let out = run(&["simulate"], Some(r#"{"tolerances": {"max_abs_err": 1e-6}}"#), dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_compares_against_the_dense_oracle() {
    let dir = TempDir::new().unwrap();
    let out = run(&["simulate"], Some(r#"{"oracle_steps": 3, "taus": [0.1], "times": [0.35]}"#), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert!(r["oracle"]["relative_deviation"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["cells"], 1);
}

#[test]
fn non_walk_generators_are_rejected_by_simulate() {
    let dir = TempDir::new().unwrap();
    let identity6: Vec<String> =
        (0..6).map(|i| format!("[{}]", (0..6).map(|j| if i == j { "1" } else { "0" }).collect::<Vec<_>>().join(", "))).collect();
    let raw = format!(r#"{{"generator": {{"type": "raw-f", "f": [{}]}}}}"#, identity6.join(", "));
    let out = run(&["simulate"], Some(&raw), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no walk"));
    let out = run(&["limit-gen"], Some(&raw), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}
