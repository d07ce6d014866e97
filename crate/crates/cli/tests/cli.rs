use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const JOIN: &str = "join(abs(delta [1,0]),abs(delta [0,1]))";

fn fblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fblab"))
        .args(args)
        .env("FBLAB_THREADS", "1")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = fblab(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn demo() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/demo.toml")
        .display()
        .to_string()
}

#[test]
fn norm_of_join() {
    let v = json(&["norm", "--space", "l1:2", "--expr", JOIN, "--k", "2", "--starts", "8"]);
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["method"], "heuristic-lower-bound");
    assert_eq!(v["certificate"]["tuple"].as_array().unwrap().len(), 2);
}

#[test]
fn adaptive_norm_and_oracle() {
    let v = json(&[
        "norm", "--space", "l1:2", "--expr", JOIN, "--starts", "8",
    ]);
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(v["history"].as_array().unwrap().len() >= 2);
    let v = json(&[
        "norm", "--space", "l1:2", "--expr", JOIN, "--k", "2", "--starts", "8", "--oracle-eta", "0.1",
    ]);
    assert_eq!(v["oracle"]["method"], "oracle");
    assert!((v["oracle"]["value"].as_f64().unwrap() - 2.0).abs() <= 0.2);
}

#[test]
fn several_expressions_share_names() {
    let v = json(&[
        "norm", "--space", "l1:2", "--expr", "abs(delta [1,0])", "--expr",
        "join(e1, abs(delta [0,1]))", "--k", "2", "--starts", "8",
    ]);
    let r = v["results"].as_array().unwrap();
    assert_eq!(r.len(), 2);
    assert!((r[1]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn c0_witness_tail() {
    let v = json(&["witness", "c0", "--n", "5"]);
    assert_eq!(v["tail_profile"], serde_json::json!([1.0, 1.0, 1.0, 1.0, 1.0]));
    assert_eq!(v["dominates"], true);
}

#[test]
fn gphi_norm() {
    let v = json(&["gphi", "--phi", "0.5,0.5", "--p", "1"]);
    assert_eq!(v["norm"], 1.0);
    assert_eq!(v["method"], "exact");
    let v = json(&["gphi", "--phi", "3,4", "--p", "2", "--support", "0"]);
    assert!((v["norm"].as_f64().unwrap() - 7f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["truncation"]["tail_bound"]["value"], 2.0);
}

#[test]
fn maximal_bound_and_probe() {
    let v = json(&[
        "bound", "--space", "l1:2", "--expr", "abs(delta [1,0])", "--expr", "abs(delta [0,1])",
        "--method", "maximal", "--starts", "8",
    ]);
    assert!((v["bound_norm"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(v["bound_norm"]["method"], "exact");
    assert_eq!(v["dominates_on_samples"], true);
    let v = json(&["maximal", "--space", "l1:2", "--expr", JOIN, "--samples", "512"]);
    assert!((v["norm"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    let v = json(&[
        "probe-lambda", "--space", "l1:2", "--expr", JOIN, "--k-list", "1,2", "--starts", "8",
    ]);
    assert!((v["rows"][0]["ratio"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn problem_file_runs_and_is_deterministic() {
    let file = demo();
    let a = fblab(&["run", &file]);
    let b = fblab(&["run", &file]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    let r = v["results"].as_array().unwrap();
    assert_eq!(r.len(), 5);
    assert!((r[0]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r[4]["task"], "witness");
}

#[test]
fn csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c0.csv");
    let out = fblab(&["witness", "c0", "--n", "3", "--csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "task,j,least_upper_bound,tail_profile,method");
    assert_eq!(lines.len(), 4);
}

#[test]
fn validation_errors_exit_2() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["norm", "--space", "l3:2", "--expr", JOIN],
        vec!["norm", "--space", "l1:2", "--expr", "delta [1,0,0]"],
        vec!["norm", "--space", "l1:2", "--expr", "join(abs(delta [1,0])"],
        vec!["maximal", "--space", "l2:2", "--expr", JOIN],
        vec!["gphi", "--phi", "1,inf"],
        vec!["bound", "--space", "l1:2", "--expr", JOIN, "--expr", "abs(delta [1,0])", "--method", "maximal", "--as-given"],
        vec!["run", "/nonexistent/problem.toml"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = fblab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "space = \"l1:2\"\n[[task]]\nkind = \"norm\"\nexpr = \"nope\"\n").unwrap();
    let out = fblab(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("task 1 (norm)"));
}

#[test]
fn computation_failure_exits_3() {
    let out = fblab(&[
        "norm", "--space", "l2:3", "--expr", "abs(delta [1,0,0])", "--k", "3", "--starts", "2",
        "--oracle-eta", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
