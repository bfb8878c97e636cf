//! Browser bindings for the engine. Every export takes and returns strings so
//! the page needs no generated TypeScript types.

use cryptoblocks::corpus;
use cryptoblocks::crypto::{aes_ecb_encrypt, crc32_hex, sha256_hex};
use cryptoblocks::format::parse_program_str;
use cryptoblocks::tasks::{Submission, TaskRegistry};
use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

fn error(kind: &str, message: impl ToString) -> Json {
    json!({ "error": kind, "message": message.to_string() })
}

/// Grades a program document. Returns Feedback, `{help}` for HELP mode, or `{error, message}`.
pub fn grade_json(document: &str, seed: u64) -> Json {
    let program = match parse_program_str(document) {
        Ok(p) => p,
        Err(e) => return error(e.kind(), e),
    };
    match TaskRegistry::builtin().submit(&program, seed) {
        Ok(Submission::Help(text)) => json!({ "help": text }),
        Ok(Submission::Graded(g)) => serde_json::to_value(&g.feedback).expect("feedback serializes"),
        Err(e) => error("TaskError", e),
    }
}

/// AES-ECB ciphertext split into 16-byte blocks, each marked with the index of
/// the first earlier block it repeats.
pub fn ecb_blocks_json(plaintext: &str, passphrase: &str) -> Json {
    let ct = match aes_ecb_encrypt(plaintext, passphrase) {
        Ok(ct) => ct,
        Err(e) => return error("CryptoError", e),
    };
    let hex = ct.as_str();
    let blocks: Vec<&str> = (0..hex.len()).step_by(32).map(|i| &hex[i..i + 32]).collect();
    let rows: Vec<Json> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let repeat_of = blocks[..i].iter().position(|p| p == b);
            json!({ "hex": b, "repeat_of": repeat_of })
        })
        .collect();
    json!({ "ciphertext": hex, "blocks": rows })
}

pub fn digest_pair_json(text: &str) -> Json {
    json!({ "crc32": crc32_hex(text).hex.as_str(), "sha256": sha256_hex(text).hex.as_str() })
}

#[wasm_bindgen]
pub fn grade(document: &str, seed: u32) -> String {
    serde_json::to_string_pretty(&grade_json(document, seed.into())).expect("json serializes")
}

#[wasm_bindgen]
pub fn ecb_blocks(plaintext: &str, passphrase: &str) -> String {
    ecb_blocks_json(plaintext, passphrase).to_string()
}

#[wasm_bindgen]
pub fn digest_pair(text: &str) -> String {
    digest_pair_json(text).to_string()
}

/// Names of the bundled example programs, as a JSON array.
#[wasm_bindgen]
pub fn example_names() -> String {
    let names: Vec<&str> = corpus::FILES
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| {
            corpus::get(n)
                .and_then(|text| parse_program_str(text).ok())
                .is_some_and(|p| p.task().is_some())
        })
        .collect();
    json!(names).to_string()
}

#[wasm_bindgen]
pub fn example(name: &str) -> Option<String> {
    corpus::get(name).map(str::to_owned)
}
