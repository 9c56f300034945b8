use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permcycle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/example2.mat")
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_then_solve_two_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("two.mat");
    let f = file.to_str().unwrap();
    let out = run(&["gen", "--n", "2", "--max", "9", "--seed", "0", "-o", f]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&file).unwrap();
    let m = permcycle::instance::parse_matrix(&text).unwrap();
    let out = run(&["solve", f, "--format", "json"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["tour_value"].as_i64(), Some(m.get(0, 1) + m.get(1, 0)));
}

#[test]
fn gen_is_reproducible() {
    let a = run(&["gen", "--n", "6", "--max", "99", "--seed", "3"]);
    let b = run(&["gen", "--n", "6", "--max", "99", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("6\ninf "));
}

#[test]
fn text_report_for_example() {
    let out = run(&["solve", &fixture()]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("ap_value 212\n"), "{s}");
    assert!(s.contains("tour_value 213\n"));
    assert!(s.contains("exactness certified_optimal\n"));
    assert!(!s.contains("timings"));
}

#[test]
fn phases_one_and_two_stop_early() {
    let out = run(&["solve", &fixture(), "--phases", "12", "--format", "json"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ap_value"].as_i64(), Some(212));
    assert!(report["phase3"].is_null());
    let out = run(&["solve", &fixture(), "--phases", "1", "--format", "json"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["ap_value"].is_null());
    assert_eq!(report["exactness"].as_str(), Some("heuristic"));
}

#[test]
fn text_trace_goes_to_stderr() {
    let out = run(&["solve", &fixture(), "--trace", "text"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("cycle_found (6 13 11 12 20 18) cycle_value=-1 value=213"), "{err}");
    assert!(err.contains("assignment_optimal value=212"));
}

#[test]
fn timings_are_opt_in() {
    let out = run(&["solve", &fixture(), "--format", "json", "--timings"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["timings"]["phase1_ms"].is_number());
}

#[test]
fn verify_agrees_on_example() {
    let out = run(&["verify", &fixture()]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.contains("ap: solver 212 == oracle 212"));
    assert!(s.contains("tsp: solver 213 == oracle 213"));
    assert!(s.contains("solver == oracle"));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mat");
    std::fs::write(&bad, "2\ninf 5\n3 4\n").unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("diagonal entry of row 2 must be inf"), "{err}");

    let out = run(&["solve", dir.path().join("missing.mat").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["solve", &fixture(), "--phases", "13"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_prints_trace_and_report() {
    let out = run(&["replay-example2"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.starts_with("start restart=0 tour=(1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20) value=1300\n"));
    assert!(s.contains("start_vertex 1 diff=-86 value=1300"));
    assert!(s.contains("trial start=4 trial=1 path=[4 14 12 16 5 6 16]"));
    assert!(s.contains("applied phase=1 (1 6 13 19 2 14 16) total=-437 before=1300 value=863"));
    assert!(s.contains("tour_value 213"));

    let out = run(&["replay-example2", "--format", "json"]);
    let lines: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines[0]["event"].as_str(), Some("start"));
    assert_eq!(lines.last().unwrap()["tour_value"].as_i64(), Some(213));
}
