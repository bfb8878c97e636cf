use cryptoblocks::corpus;
use cryptoblocks_oracles as oracle;
use cryptoblocks_web::{digest_pair_json, ecb_blocks_json, example, example_names, grade, grade_json};

#[test]
fn grades_examples_like_the_engine() {
    let fb = grade_json(corpus::get("task8_wrongkey.json").unwrap(), 3);
    assert_eq!(fb["verdict"], "INCORRECT_RESULT");
    assert_eq!(fb["findings"][0]["code"], "CONFIDENTIALITY_BREACH");
    let text = grade(&example("task1_reference.json").unwrap(), 3);
    assert!(text.contains("\"verdict\": \"SUCCESS\""));
}

#[test]
fn grade_reports_errors_as_json() {
    assert_eq!(grade_json("{", 0)["error"], "ParseError");
    assert_eq!(grade_json(r#"{"version": 9, "body": []}"#, 0)["error"], "SchemaError");
    assert_eq!(grade_json(corpus::get("aes_round_trip.json").unwrap(), 0)["error"], "TaskError");
}

#[test]
fn ecb_blocks_mark_repeats() {
    let v = ecb_blocks_json("ATTACK AT DAWN!!ATTACK AT DAWN!!tail", "k");
    let blocks = v["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    assert_eq!(blocks[0]["repeat_of"], serde_json::Value::Null);
    assert_eq!(blocks[1]["repeat_of"], 0);
    assert_eq!(blocks[1]["hex"], blocks[0]["hex"]);
    assert_eq!(blocks[2]["repeat_of"], serde_json::Value::Null);
    let bytes = oracle::aes::ecb_encrypt(b"ATTACK AT DAWN!!ATTACK AT DAWN!!tail", "k");
    assert_eq!(v["ciphertext"], oracle::to_hex(&bytes));
    assert_eq!(ecb_blocks_json("x", "")["error"], "CryptoError");
}

#[test]
fn digest_pair_matches_oracles() {
    let v = digest_pair_json("abc");
    assert_eq!(v["crc32"], oracle::crc32::crc32_hex(b"abc"));
    assert_eq!(v["sha256"], oracle::sha256::sha256_hex(b"abc"));
}

#[test]
fn example_names_are_task_bound() {
    let names: Vec<String> = serde_json::from_str(&example_names()).unwrap();
    assert_eq!(names.len(), 17);
    assert!(!names.iter().any(|n| n == "aes_round_trip.json"));
}
