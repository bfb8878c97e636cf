use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use cryptoblocks::corpus;
use cryptoblocks::crypto::{
    aes_ecb_decrypt, aes_ecb_encrypt, caesar_shift, crc32_hex, rsa_apply, rsa_unapply, sha256_hex,
    Direction, Payload, RsaKeypair,
};
use cryptoblocks::format::parse_program_str;
use cryptoblocks::tasks::{verify_caesar_cryptanalysis, Submission, TaskDefinition, TaskRegistry, Verdict};
use cryptoblocks::value::{HexBytes, Value};
use cryptoblocks_cli::engine::{self, EngineError};
use cryptoblocks_cli::{router, AppState, SessionStore};
use cryptoblocks_oracles as oracle;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn check(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let result = panic::catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
    match result {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  {name}: {why}");
            false
        }
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let len = rng.gen_range(0..=max);
    (0..len)
        .map(|_| match rng.gen_range(0..10) {
            0 => char::from_u32(rng.gen_range(0xA0..0x2FFF)).unwrap_or('?'),
            _ => rng.gen_range(' '..='~'),
        })
        .collect()
}

fn crypto_vectors() -> Outcome {
    let start = Instant::now();
    let mut inputs: Vec<String> = vec![
        String::new(),
        "abc".into(),
        "123456789".into(),
        "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq".into(),
    ];
    for len in [1, 55, 56, 57, 63, 64, 65, 111, 112, 119, 120, 127, 128, 129] {
        inputs.push("a".repeat(len));
        inputs.push((0..len).map(|i| (b'0' + (i % 43) as u8) as char).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    while inputs.len() < 64 {
        inputs.push(random_text(&mut rng, 200));
    }
    for s in &inputs {
        ensure!(
            sha256_hex(s).hex.as_str() == oracle::sha256::sha256_hex(s.as_bytes()),
            "sha256 mismatch for {s:?}"
        );
        ensure!(
            crc32_hex(s).hex.as_str() == oracle::crc32::crc32_hex(s.as_bytes()),
            "crc32 mismatch for {s:?}"
        );
    }
    ensure!(crc32_hex("123456789").hex.as_str() == "cbf43926", "crc32 check value");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{} vectors, {elapsed:.2?}", inputs.len()))
}

fn round_trips() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let s = random_text(&mut rng, 60);
        let k: i64 = rng.gen_range(-1000..1000);
        let ct = caesar_shift(&s, k, Direction::Encrypt);
        ensure!(ct == oracle::caesar::shift(&s, k), "caesar vs oracle for {s:?}, {k}");
        ensure!(caesar_shift(&ct, k, Direction::Decrypt) == s, "caesar {s:?}, {k}");
    }
    for _ in 0..1000 {
        let s = random_text(&mut rng, 80);
        let mut key = random_text(&mut rng, 20);
        key.push('k');
        let ct = aes_ecb_encrypt(&s, &key).map_err(|e| e.to_string())?;
        ensure!(ct.to_bytes() == oracle::aes::ecb_encrypt(s.as_bytes(), &key), "aes vs oracle");
        ensure!(aes_ecb_decrypt(&ct, &key).map_err(|e| e.to_string())? == s, "aes {s:?}");
    }
    let kp = RsaKeypair::generate_seeded(512, "acceptance", 3).map_err(|e| e.to_string())?;
    let (public, private) = (kp.public_key(), kp.private_key());
    for _ in 0..1000 {
        let mut s = random_text(&mut rng, 100);
        s.push('.');
        let ct = rsa_apply(&Payload::Text(s.clone()), &public).map_err(|e| e.to_string())?;
        ensure!(
            rsa_unapply(&ct, &private).map_err(|e| e.to_string())? == Payload::Text(s),
            "rsa public -> private"
        );
        let bytes: Vec<u8> = (0..rng.gen_range(1..80)).map(|_| rng.gen()).collect();
        let hex = HexBytes::from_bytes(&bytes);
        let sig = rsa_apply(&Payload::Hex(hex.clone()), &private).map_err(|e| e.to_string())?;
        ensure!(
            rsa_unapply(&sig, &public).map_err(|e| e.to_string())? == Payload::Hex(hex),
            "rsa private -> public"
        );
    }
    let toy = RsaKeypair::from_parts(3233u32.into(), 17u32.into(), 2753u32.into(), "toy")
        .map_err(|e| e.to_string())?;
    for m in 0..3233u64 {
        let c = toy.public_key().transform(&BigUint::from(m));
        ensure!(c == BigUint::from(oracle::rsa::modexp_naive(m, 17, 3233)), "toy encrypt {m}");
        ensure!(toy.private_key().transform(&c) == BigUint::from(m), "toy decrypt {m}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("3 x 1000 cases, 3233 toy residues, {elapsed:.2?}"))
}

fn aes_semantics() -> Outcome {
    let ct = aes_ecb_encrypt(&"SIXTEEN BYTE BLK".repeat(2), "pin").map_err(|e| e.to_string())?;
    let hex = ct.as_str();
    ensure!(hex[..32] == hex[32..64], "identical blocks differ: {hex}");
    for n in 0..=64usize {
        let len = aes_ecb_encrypt(&"m".repeat(n), "pin").map_err(|e| e.to_string())?.as_str().len();
        ensure!(len == 32 * (n + 1).div_ceil(16), "n = {n}: {len} hex chars");
    }
    Ok("ECB block repetition, length law n = 0..64".into())
}

fn grade_file(file: &str, seed: u64) -> Result<(Verdict, Vec<String>), String> {
    let program = parse_program_str(corpus::get(file).ok_or(file)?).map_err(|e| e.to_string())?;
    let graded = TaskRegistry::builtin().execute(&program, seed).map_err(|e| e.to_string())?;
    let codes = graded.feedback.codes().iter().map(|c| c.as_str().to_owned()).collect();
    Ok((graded.feedback.verdict, codes))
}

fn truth_table() -> Outcome {
    let registry = TaskRegistry::builtin();
    for task in registry.tasks() {
        let (verdict, codes) = grade_file(&task.reference, 5)?;
        ensure!(verdict == Verdict::Success, "{}: {verdict}", task.reference);
        ensure!(codes.is_empty(), "{}: false findings {codes:?}", task.reference);
    }
    let rows: [(&str, Verdict, Option<&str>); 6] = [
        ("task8_wrongkey.json", Verdict::IncorrectResult, Some("CONFIDENTIALITY_BREACH")),
        ("task7_public_key.json", Verdict::IncorrectResult, Some("AUTHENTICATION_FLAW")),
        ("task7_crc32.json", Verdict::IncorrectResult, Some("SIGNATURE_SPOOFING_RISK")),
        ("task8_plaintext.json", Verdict::IncorrectResult, None),
        ("task7_hash_of_hash.json", Verdict::IncorrectResult, None),
        ("task8_aes_for_key.json", Verdict::IncorrectResult, None),
    ];
    for (file, want, finding) in rows {
        let (verdict, codes) = grade_file(file, 5)?;
        let want_codes: Vec<String> = finding.into_iter().map(String::from).collect();
        ensure!(
            verdict == want && codes == want_codes,
            "{file}: got {verdict} {codes:?}, want {want} {want_codes:?}"
        );
    }
    Ok(format!("{} references, 6 flawed variants", registry.tasks().len()))
}

fn task3_end_to_end() -> Outcome {
    let program = parse_program_str(corpus::get("task3_reference.json").unwrap()).map_err(|e| e.to_string())?;
    for shift in 0..26 {
        let task = TaskDefinition::caesar_challenge(shift);
        let graded = task.execute(&program, 0).map_err(|e| e.to_string())?;
        ensure!(graded.feedback.verdict == Verdict::Success, "shift {shift}: {}", graded.feedback.verdict);
        let Some(Value::Integer(found)) = graded.outcome.final_bindings.get("Result") else {
            return Err(format!("shift {shift}: no integer result"));
        };
        ensure!(*found == shift, "shift {shift}: recovered {found}");
        let plaintext = match &task.verifier {
            cryptoblocks::tasks::Verifier::CaesarCryptanalysis { plaintext, .. } => plaintext.clone(),
            _ => return Err("task 3 verifier kind".into()),
        };
        let as_text = verify_caesar_cryptanalysis(shift, &plaintext, &Value::Text(plaintext.clone()));
        ensure!(as_text.verdict == Verdict::Success, "shift {shift}: text answer rejected");
        let as_shift = verify_caesar_cryptanalysis(shift, &plaintext, &Value::Integer(shift));
        ensure!(as_shift.verdict == Verdict::Success, "shift {shift}: integer answer rejected");
    }
    Ok("shifts 0..25 recovered; shift and text answers accepted".into())
}

async fn spawn_server() -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(AppState {
        sessions: Arc::new(SessionStore::in_memory()),
    });
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn graded_files() -> Vec<&'static str> {
    corpus::FILES
        .iter()
        .map(|(name, _)| *name)
        .filter(|name| {
            let p = parse_program_str(corpus::get(name).unwrap()).unwrap();
            p.task().is_some()
        })
        .collect()
}

fn determinism(rt: &tokio::runtime::Runtime, base: &str) -> Outcome {
    let files = graded_files();
    let client = reqwest::Client::new();
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    for file in &files {
        let runs: Vec<String> = (0..3)
            .map(|_| {
                let program = parse_program_str(corpus::get(file).unwrap()).unwrap();
                match engine::grade(&program, 11) {
                    Ok(Submission::Graded(g)) => g.feedback.to_json(),
                    other => panic!("{file}: {other:?}"),
                }
            })
            .collect();
        ensure!(runs.iter().all(|r| *r == runs[0]), "{file}: feedback differs across runs");

        let out = Command::new(env!("CARGO_BIN_EXE_cryptoblocks"))
            .args(["grade", dir.join(file).to_str().unwrap(), "--seed", "11"])
            .output()
            .map_err(|e| e.to_string())?;
        let cli = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
        ensure!(cli.trim_end() == runs[0], "{file}: CLI output differs from library");

        let doc: Json = serde_json::from_str(corpus::get(file).unwrap()).unwrap();
        let http = rt.block_on(async {
            let resp: Json = client
                .post(format!("{base}/execute"))
                .json(&json!({ "program": doc, "seed": 11 }))
                .send()
                .await?
                .json()
                .await?;
            Ok::<_, reqwest::Error>(resp)
        });
        let http = http.map_err(|e| e.to_string())?;
        let http = serde_json::to_string_pretty(&http["feedback"]).unwrap();
        ensure!(http == runs[0], "{file}: HTTP feedback differs from CLI");
    }
    Ok(format!("{} programs x 3 runs; CLI == HTTP", files.len()))
}

fn mutate(rng: &mut ChaCha8Rng, text: &str) -> Vec<u8> {
    let mut bytes = text.as_bytes().to_vec();
    for _ in 0..rng.gen_range(1..5) {
        if bytes.is_empty() {
            break;
        }
        let at = rng.gen_range(0..bytes.len());
        match rng.gen_range(0..4) {
            0 => bytes[at] = rng.gen(),
            1 => {
                bytes.remove(at);
            }
            2 => bytes.insert(at, b"{}[]\",:0-9"[rng.gen_range(0..10)]),
            _ => {
                let end = (at + rng.gen_range(1..40)).min(bytes.len());
                let chunk = bytes[at..end].to_vec();
                let to = rng.gen_range(0..bytes.len());
                bytes.splice(to..to, chunk);
            }
        }
    }
    bytes
}

fn robustness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut parse, mut schema, mut diagnostics, mut verdicts, mut other) = (0, 0, 0, 0, 0);
    let prior = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let result = (|| {
        for i in 0..10_000 {
            let (name, text) = corpus::FILES[i % corpus::FILES.len()];
            let bytes = mutate(&mut rng, text);
            let graded = panic::catch_unwind(|| {
                let program = engine::parse_document(&bytes)?;
                engine::grade(&program, 0)
            })
            .map_err(|p| format!("mutation {i} of {name} panicked: {}", panic_text(&p)))?;
            match graded {
                Ok(_) => verdicts += 1,
                Err(EngineError::Format(e)) if e.kind() == "ParseError" => parse += 1,
                Err(EngineError::Format(_)) => schema += 1,
                Err(EngineError::Invalid(_)) => diagnostics += 1,
                Err(_) => other += 1,
            }
        }
        Ok::<_, String>(())
    })();
    panic::set_hook(prior);
    result?;
    Ok(format!(
        "10000 mutations: {parse} parse, {schema} schema, {diagnostics} diagnostics, {verdicts} verdicts, {other} task errors"
    ))
}

fn service(rt: &tokio::runtime::Runtime, base: &str) -> Outcome {
    let reference: Json = serde_json::from_str(corpus::get("task1_reference.json").unwrap()).unwrap();
    let flawed: Json = serde_json::from_str(corpus::get("task1_caesar.json").unwrap()).unwrap();
    let client = reqwest::Client::new();
    let results = rt.block_on(async {
        let requests = (0..50).map(|i| {
            let client = client.clone();
            let doc = if i % 2 == 0 { reference.clone() } else { flawed.clone() };
            let url = format!("{base}/execute");
            tokio::spawn(async move {
                let start = Instant::now();
                let resp = client.post(url).json(&json!({ "program": doc, "seed": i })).send().await?;
                let status = resp.status().as_u16();
                let body: Json = resp.json().await?;
                Ok::<_, reqwest::Error>((i, status, body, start.elapsed()))
            })
        });
        let mut out = Vec::new();
        for handle in requests.collect::<Vec<_>>() {
            out.push(handle.await);
        }
        out
    });
    let mut latencies = Vec::new();
    let mut sessions = std::collections::BTreeSet::new();
    for r in results {
        let (i, status, body, elapsed) = r.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
        ensure!(status == 200, "request {i}: status {status}");
        let (want, finding) = if i % 2 == 0 {
            ("SUCCESS", Json::Null)
        } else {
            ("MALFORMED_RESULT", json!("WEAK_CIPHER_FOR_CONFIDENTIALITY"))
        };
        ensure!(body["feedback"]["verdict"] == want, "request {i}: {}", body["feedback"]);
        ensure!(body["feedback"]["findings"][0]["code"] == finding, "request {i}: {}", body["feedback"]);
        ensure!(body["seed"] == i, "request {i}: seed {}", body["seed"]);
        sessions.insert(body["session_id"].as_str().unwrap_or_default().to_owned());
        latencies.push(elapsed);
    }
    ensure!(sessions.len() == 50, "session ids not distinct");
    latencies.sort();
    let p95 = latencies[(latencies.len() * 95).div_ceil(100) - 1];
    ensure!(p95 < Duration::from_millis(500), "p95 {p95:?}");
    Ok(format!("50 concurrent requests, p95 {p95:.2?}"))
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    let base = rt.block_on(spawn_server());
    let results = [
        check("crypto vectors", crypto_vectors),
        check("round trips", round_trips),
        check("aes semantics", aes_semantics),
        check("task truth table", truth_table),
        check("task 3 end to end", task3_end_to_end),
        check("determinism", || determinism(&rt, &base)),
        check("robustness", robustness),
        check("service", || service(&rt, &base)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} criteria, {failed} failed", results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
