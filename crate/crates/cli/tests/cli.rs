use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(file)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cryptoblocks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn grade_reference_exits_zero() {
    let out = cli(&["grade", corpus("task8_reference.json").to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "SUCCESS");
}

#[test]
fn grade_wrong_key_exits_two_with_finding() {
    let out = cli(&["grade", corpus("task8_wrongkey.json").to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let fb = stdout_json(&out);
    assert_eq!(fb["findings"][0]["code"], "CONFIDENTIALITY_BREACH");
}

#[test]
fn runtime_error_exits_three() {
    let text = std::fs::read_to_string(corpus("task2_reference.json"))
        .unwrap()
        .replace("\"SharedPassphrase\"", "\"EncryptedMessage\"");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, text).unwrap();
    let out = cli(&["grade", path.to_str().unwrap(), "--seed", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["verdict"], "RUNTIME_ERROR");
}

#[test]
fn usage_errors_exit_64_with_json() {
    let out = cli(&["grade"]);
    assert_eq!(out.status.code(), Some(64));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "UsageError");
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(64));
}

#[test]
fn malformed_documents_exit_65_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"version\": 1, \"body\": [").unwrap();
    let out = cli(&["grade", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "ParseError");
    assert!(err["position"]["line"].is_number());

    let out = cli(&["grade", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(66));
}

#[test]
fn tasks_subcommands() {
    let out = cli(&["tasks", "list"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 8);

    let out = cli(&["tasks", "help", "task7_signature"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("M|[H(M)]_A"));
    assert_eq!(cli(&["tasks", "help", "nope"]).status.code(), Some(65));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("starter.json");
    let out = cli(&["tasks", "starter", "task8_pgp", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = cli(&["grade", path.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["verdict"], "STARTER_UNCHANGED");
}

#[test]
fn run_prints_outcome_and_optional_trace() {
    let path = corpus("aes_round_trip.json");
    let out = cli(&["run", path.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout_json(&out);
    assert_eq!(summary["say_outputs"][1], "HELLO");
    assert_eq!(summary["seed"], 5);
    assert!(summary.get("trace").is_none());

    let out = cli(&["run", path.to_str().unwrap(), "--emit-trace"]);
    let summary = stdout_json(&out);
    assert_eq!(summary["trace"].as_array().unwrap().len(), 2);
    assert_eq!(summary["trace"][0]["opcode"], "aes_encrypt");
}

#[test]
fn corpus_verify_passes() {
    let out = cli(&["corpus", "verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("16 checked, 0 failed"));
}

#[test]
fn keygen_is_seeded() {
    let a = cli(&["keygen", "--owner", "carol", "--bits", "512", "--seed", "8"]);
    let b = cli(&["keygen", "--owner", "carol", "--bits", "512", "--seed", "8"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["role"], "PUBLIC");
    assert_eq!(lines[1]["role"], "PRIVATE");
}
