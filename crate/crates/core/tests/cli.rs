use std::process::{Command, Output};

use serde_json::Value;

fn pqbask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqbask"))
        .args(args)
        .output()
        .expect("spawn pqbask")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let args = ["figure", "--range", "0:1:0.1"];
    let a = pqbask(&args);
    let b = pqbask(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn swapped_parameters_are_a_usage_error() {
    let out = pqbask(&["eval", "--f", "x", "--n", "2", "--p", "0.8", "--q", "0.9", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires q < p"));
}

#[test]
fn unknown_identifier_is_a_usage_error() {
    let out = pqbask(&["eval", "--f", "y+1", "--n", "2", "--p", "0.9", "--q", "0.8", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truncated_series_exits_with_partial_result() {
    let out = pqbask(&[
        "eval", "--f", "x^2", "--n", "2", "--p", "0.9", "--q", "0.8", "--x", "1", "--kmax", "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][4], "false");
}

#[test]
fn evaluation_failure_exits_four() {
    let out = pqbask(&[
        "eval", "--f", "1/(x-x)", "--n", "2", "--p", "0.9", "--q", "0.8", "--x", "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn json_output_parses_and_carries_meta() {
    let out = pqbask(&[
        "eval", "--f", "x^2", "--n", "2", "--p", "0.9", "--q", "0.8", "--x", "1", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["meta"]["command"], "eval");
    let value = v["rows"][0]["value"].as_f64().unwrap();
    assert!((value - 2.125).abs() < 1e-9);
    assert_eq!(v["rows"][0]["converged"], true);
}

#[test]
fn out_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moments.csv");
    let out = pqbask(&[
        "moments",
        "--n",
        "2",
        "--p",
        "0.9",
        "--q",
        "0.8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("x,m0_series"));
}

#[test]
fn moments_csv_round_trips_and_matches_closed_form() {
    let out = pqbask(&[
        "moments", "--n", "5", "--p", "0.95", "--q", "0.9", "--range", "0:5:0.25",
    ]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0][1..7], ["1", "0", "0", "1", "0", "0"]);
    for row in rows {
        let nums: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert!(nums[7] <= 1e-8, "gap {} at x={}", nums[7], nums[0]);
    }
}

#[test]
fn king_moments_reproduce_x_squared() {
    let out = pqbask(&[
        "moments",
        "--n",
        "10",
        "--p",
        "0.99",
        "--q",
        "0.98",
        "--operator",
        "king",
        "--range",
        "0.5:2:0.5",
    ]);
    assert!(out.status.success());
    for row in data_rows(&stdout(&out)) {
        let x: f64 = row[0].parse().unwrap();
        let m2: f64 = row[3].parse().unwrap();
        assert!((m2 - x * x).abs() <= 1e-8, "x={x}: {m2}");
    }
}

#[test]
fn bounds_audit_has_one_row_per_combination() {
    let out = pqbask(&["bounds", "--range", "0:1:0.5"]);
    assert!(out.status.success());
    // two n values times two parameter pairs times three points
    assert_eq!(data_rows(&stdout(&out)).len(), 12);
}
