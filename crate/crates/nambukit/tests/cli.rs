use std::path::PathBuf;
use std::process::{Command, Output};

fn write(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn nambukit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nambukit")).args(args).output().unwrap()
}

fn session(name: &str) -> String {
    format!("{}/sessions/{name}.nk", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn passing_session_exits_zero() {
    let out = nambukit(&["run", &session("examples")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[pass] line 14: bracket P x y z expect w;\n    w\n"));
    assert!(text.trim_end().ends_with("0 failed, 0 errors"));
}

#[test]
fn failing_check_exits_one() {
    let p = write("fails.nk", "chart x y z w;\nnambu P order 3 = w*Dx^Dy^Dz;\nbracket P x y z expect x;\ncheck-fi P;\n");
    let out = nambukit(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[fail] line 3"), "{text}");
    assert!(text.contains("[pass] line 4"), "{text}");
}

#[test]
fn parse_errors_exit_two_with_position() {
    let p = write("bad.nk", "chart x y;\nfn f = x + q;\n");
    let out = nambukit(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2, column 12: UnknownName"), "{err}");
}

#[test]
fn missing_file_and_bad_flags_exit_two() {
    assert_eq!(nambukit(&["run", "/nonexistent/session.nk"]).status.code(), Some(2));
    assert_eq!(nambukit(&["run", &session("gauge"), "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn json_is_deterministic_and_versioned() {
    let path = session("gauge");
    let a = nambukit(&["run", &path, "--json", "--seed", "5"]);
    let b = nambukit(&["run", &path, "--json", "--seed", "5", "--jobs", "2"]);
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["seed"], 5);
    assert_eq!(doc["summary"]["fail"], 0);
    assert!(doc["entries"].as_array().unwrap().iter().all(|e| e.get("millis").is_none()));
}

#[test]
fn timing_adds_millis() {
    let out = nambukit(&["run", &session("canonicity"), "--json", "--timing"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["entries"].as_array().unwrap().iter().all(|e| e["millis"].is_u64()));
}
