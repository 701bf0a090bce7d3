use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treekoszul"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    root.to_string_lossy().into_owned()
}

#[test]
fn lists_seven_trees() {
    let out = run(&["trees", "--n", "2", "--leaves", "3"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "trees");
    let trees: Vec<&str> = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["result"]["tree"].as_str().unwrap())
        .collect();
    assert_eq!(trees.len(), 7);
    assert!(trees.contains(&"2:[1,2,3];[1,1,1]"));
}

#[test]
fn koszul_check_passes() {
    let out = run(&["koszul-check", "--n", "1", "--leaves", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["ok"], true);
    let records = r["records"].as_array().unwrap();
    assert!(records.iter().any(|x| x["name"] == "iota-cycle"));
    assert!(records
        .iter()
        .all(|x| x["status"] == "pass" && x["millis"].is_number()));
}

#[test]
fn iterated_bar_from_file() {
    let path = data("dual-numbers.json");
    let out = run(&[
        "iterated-bar",
        "--algebra",
        &path,
        "--n",
        "2",
        "--bound",
        "3",
    ]);
    assert!(out.status.success());
    let result = &report(&out)["records"][0]["result"];
    assert_eq!(result["equal"], true);
    assert_eq!(
        result["koszul"],
        serde_json::json!({"0": 1, "2": 1, "3": 1})
    );
}

#[test]
fn graded_algebra_over_f2() {
    let path = data("exterior-two.json");
    let out = run(&[
        "iterated-bar",
        "--algebra",
        &path,
        "--n",
        "2",
        "--ring",
        "fp:2",
    ]);
    assert!(out.status.success());
}

#[test]
fn single_pair() {
    let out = run(&["bar", "--tau", "1:[1,1,1]", "--sigma", "1:[1]"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["records"].as_array().unwrap().len(), 1);
    assert_eq!(
        r["records"][0]["result"]["homology"],
        serde_json::json!({"2": 1})
    );
}

#[test]
fn csv_output() {
    let out = run(&["relations", "--n", "2", "--leaves", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("schema_version,name,status,params,result,millis")
    );
    assert!(lines.all(|l| l.starts_with("1,quadratic-relations,pass,")));
}

#[test]
fn seeded_runs_are_deterministic() {
    let strip = |v: Value| {
        v["records"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| (x["params"].clone(), x["result"].clone()))
            .collect::<Vec<_>>()
    };
    let args = [
        "ext",
        "--n",
        "1",
        "--leaves",
        "3",
        "--seed",
        "7",
        "--samples",
        "5",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(strip(report(&a)), strip(report(&b)));
    assert_eq!(report(&a)["config"]["seed"], 7);
}

#[test]
fn failures_exit_nonzero() {
    let out = run(&["iterated-bar", "--algebra", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["records"][0]["status"], "fail");
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["trees", "--ring", "fp:4"]).status.code(), Some(2));
    assert_eq!(run(&["trees", "--cap", "0"]).status.code(), Some(2));
    assert_eq!(run(&["bar", "--tau", "1:[1,1]"]).status.code(), Some(2));
}
