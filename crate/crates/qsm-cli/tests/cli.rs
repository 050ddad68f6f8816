//! End-to-end checks of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

fn qsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn simulate_deterministic_machine_dumps_one_line() {
    let output = qsm(&["simulate", "--machine", "classical-enumerator", "--steps", "9"]);
    assert!(output.status.success());
    let dump = stdout(&output);
    assert_eq!(dump.lines().count(), 1);
    assert!(dump.contains("0P(PP)0PP"));
}

#[test]
fn simulate_zero_steps_dumps_initial_line() {
    let output = qsm(&["simulate", "--machine", "classical-enumerator", "--steps", "0"]);
    assert!(output.status.success());
    assert_eq!(stdout(&output), "1 0 i 0\n");
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--machine", "branching-printer", "--steps", "12"];
    let first = qsm(&args);
    let second = qsm(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn invalid_spec_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let output = qsm(&["simulate", "--machine", path.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(output.status.code(), Some(2));

    let output = qsm(&["simulate", "--machine", "/no/such/file.json", "--steps", "3"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn roundtripped_machine_spec_loads() {
    // write a machine spec out through the library, read it back via the CLI
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("machine.json");
    let table = qsm_core::machine::builtin(qsm_core::machine::Builtin::ClassicalEnumerator);
    std::fs::write(&path, table.to_json()).unwrap();
    let output = qsm(&["simulate", "--machine", path.to_str().unwrap(), "--steps", "9"]);
    assert!(output.status.success());
    assert!(stdout(&output).contains("0P(PP)0PP"));
}

#[test]
fn check_flags_invalid_machine_with_exit_one() {
    let output = qsm(&["check", "--machine", "invalid-printer", "--steps", "20"]);
    assert_eq!(output.status.code(), Some(1));
    let summary = String::from_utf8_lossy(&output.stderr);
    assert!(summary.contains("CANNOT BE VALID"), "summary: {summary}");
    // stdout carries the JSON report
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(doc["cannot_be_valid"], serde_json::Value::Bool(true));
}

#[test]
fn check_valid_machine_exits_zero() {
    let output = qsm(&["check", "--machine", "classical-enumerator", "--steps", "20"]);
    assert_eq!(output.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(doc["valid_so_far"], serde_json::Value::Bool(true));
}

#[test]
fn check_output_is_byte_identical_across_runs() {
    let args = [
        "check",
        "--machine",
        "branching-printer",
        "--steps",
        "14",
        "--max-sentence-len",
        "6",
    ];
    let first = qsm(&args);
    let second = qsm(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stderr, second.stderr);
}

#[test]
fn check_branching_reports_disjoint_paths() {
    let output = qsm(&["check", "--machine", "branching-printer", "--steps", "20"]);
    assert_eq!(output.status.code(), Some(0));
    let summary = String::from_utf8_lossy(&output.stderr);
    assert!(summary.contains("disjoint paths"), "summary: {summary}");
}

#[test]
fn check_incomplete_liar_reports_self_reference() {
    let output = qsm(&["check", "--machine", "incomplete-liar", "--steps", "15"]);
    assert_eq!(output.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert!(doc["incompleteness"]["cannot_be_valid"].as_bool().unwrap());
}

#[test]
fn paths_emits_dot_and_json() {
    let output = qsm(&["paths", "--machine", "branching-printer", "--steps", "12"]);
    assert!(output.status.success());
    let dot = stdout(&output);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches('{').count(), dot.matches('}').count());

    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("tree.dot");
    let output = qsm(&[
        "paths",
        "--machine",
        "branching-printer",
        "--steps",
        "12",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(Path::new(&dir.path().join("tree.dot")).exists());
    let json_text = std::fs::read_to_string(dir.path().join("tree.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    assert_eq!(doc["horizon"], serde_json::json!(12));
}

#[test]
fn rotate_reports_nonzero_joint_amplitude() {
    let output = qsm(&[
        "rotate",
        "--machine",
        "branching-printer",
        "--steps",
        "12",
        "--unitary",
        "rot-0P(0.3)",
        "--omega",
        "cumulative",
    ]);
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert!(doc["transport"]["agreement"].as_bool().unwrap());
    let joints = doc["joint_amplitudes"].as_array().unwrap();
    let value = joints
        .iter()
        .find(|j| j["sentence"] == "~P(PP)")
        .and_then(|j| j["joint_amplitude"].as_f64())
        .expect("~P(PP) joint amplitude present");
    assert!(value > 1e-6, "joint amplitude {value}");
}

#[test]
fn eps_override_via_environment() {
    let bad = Command::new(env!("CARGO_BIN_EXE_qsm"))
        .args(["simulate", "--machine", "classical-enumerator", "--steps", "3"])
        .env("QSM_EPS_AMP", "not-a-number")
        .output()
        .expect("binary runs");
    assert_eq!(bad.status.code(), Some(2));

    let good = Command::new(env!("CARGO_BIN_EXE_qsm"))
        .args(["simulate", "--machine", "classical-enumerator", "--steps", "3"])
        .env("QSM_EPS_AMP", "1e-10")
        .output()
        .expect("binary runs");
    assert!(good.status.success());
    assert_eq!(stdout(&good).lines().count(), 1);
}

#[test]
fn rotate_identity_preserves_verdicts() {
    let output = qsm(&[
        "rotate",
        "--machine",
        "branching-printer",
        "--steps",
        "12",
        "--unitary",
        "identity",
        "--omega",
        "local",
    ]);
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert!(doc["transport"]["agreement"].as_bool().unwrap());
    let joints = doc["joint_amplitudes"].as_array().unwrap();
    let value = joints
        .iter()
        .find(|j| j["sentence"] == "~P(PP)")
        .and_then(|j| j["joint_amplitude"].as_f64())
        .expect("~P(PP) joint amplitude present");
    assert!(value <= 1e-12, "identity joint amplitude {value}");
}
