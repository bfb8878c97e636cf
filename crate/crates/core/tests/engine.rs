use cryptoblocks::analyzer::{analyze, analyze_with, dataflow_origin, FindingCode, RuleCatalog};
use cryptoblocks::blocks::{palette, Opcode};
use cryptoblocks::corpus;
use cryptoblocks::crypto::KeyRole;
use cryptoblocks::format::parse_program_str;
use cryptoblocks::interpreter::{run, Environment, EventKind, ResourceLimits, RunStatus};
use cryptoblocks::program::{BlockProgram, Expression, Statement};
use cryptoblocks::tasks::TaskRegistry;
use cryptoblocks::value::Value;

fn load(file: &str) -> BlockProgram {
    parse_program_str(corpus::get(file).unwrap()).unwrap()
}

#[test]
fn aes_round_trip_demo_says_both_values() {
    let out = run(&load("aes_round_trip.json"), &Environment::new(), &ResourceLimits::default());
    assert!(out.is_completed(), "{:?}", out.status);
    assert_eq!(
        out.say_outputs,
        ["5cc8ce47b15dda03f6d9367ac568b0d1", "HELLO"]
    );
    assert_eq!(out.crypto_event_count(), 2);
}

#[test]
fn signature_demo_generates_and_verifies() {
    let env = Environment {
        rsa_key_bits: 512,
        ..Environment::new().with_seed(4)
    };
    let out = run(&load("signature_demo.json"), &env, &ResourceLimits::default());
    assert!(out.is_completed(), "{:?}", out.status);
    assert_eq!(out.say_outputs.last().unwrap(), "true");
    let Value::RsaKey(k) = &out.final_bindings["AlicePrivate"] else {
        panic!()
    };
    assert_eq!(k.role, KeyRole::Private);
    assert_eq!(k.owner, "alice");
}

#[test]
fn keygen_budget_is_enforced() {
    let keygen = Statement::SetKeypair {
        owner: Expression::text("x"),
        public: "P".into(),
        private: "S".into(),
    };
    let program = BlockProgram::new(None, vec![keygen.clone(), keygen]);
    let env = Environment {
        rsa_key_bits: 512,
        ..Environment::new()
    };
    let limits = ResourceLimits {
        max_keygens: 1,
        ..ResourceLimits::default()
    };
    let status = run(&program, &env, &limits).status;
    assert!(matches!(status, RunStatus::ResourceLimit { .. }), "{status:?}");
}

#[test]
fn step_limit_stops_long_loops() {
    let inner = Statement::Repeat {
        count: Expression::int(1000),
        body: vec![Statement::Say(Expression::text("tick"))],
    };
    let program = BlockProgram::new(
        None,
        vec![Statement::Repeat {
            count: Expression::int(1000),
            body: vec![inner],
        }],
    );
    let out = run(&program, &Environment::new(), &ResourceLimits::default());
    assert!(matches!(out.status, RunStatus::ResourceLimit { .. }));
}

#[test]
fn type_errors_are_runtime_errors() {
    let task = TaskRegistry::builtin().get("task4_rsa_encrypt").unwrap();
    let program = BlockProgram::new(
        None,
        vec![Statement::set(
            "X",
            Expression::crypto(
                Opcode::CaesarEncrypt,
                vec![Expression::var("BobPublicKey"), Expression::int(3)],
            ),
        )],
    );
    let out = run(&program, &task.environment(0), &ResourceLimits::default());
    assert!(matches!(out.status, RunStatus::RuntimeError { .. }));
}

#[test]
fn trace_records_rsa_provenance_and_result() {
    let task = TaskRegistry::builtin().get("task8_pgp").unwrap();
    let out = run(&load("task8_reference.json"), &task.environment(1), &ResourceLimits::default());
    let rsa = out
        .trace
        .iter()
        .find(|e| e.opcode() == Some(Opcode::RsaEncrypt))
        .unwrap();
    let key = rsa.key.as_ref().unwrap();
    assert_eq!((key.owner.as_str(), key.role), ("bob", KeyRole::Public));
    let last = out.trace.last().unwrap();
    assert_eq!(last.kind, EventKind::Result);
    let origin = dataflow_origin(last.seq, &out.trace);
    let ops: Vec<_> = origin.opcodes(&out.trace).map(|(op, _)| op).collect();
    for op in [Opcode::RandomKey, Opcode::AesEncrypt, Opcode::RsaEncrypt] {
        assert!(ops.contains(&op), "{op:?} missing from {ops:?}");
    }
    let json: serde_json::Value = serde_json::from_str(&out.to_json()).unwrap();
    assert_eq!(json["status"]["kind"], "COMPLETED");
}

#[test]
fn wrong_key_span_points_at_the_rsa_block() {
    let task = TaskRegistry::builtin().get("task8_pgp").unwrap();
    let program = load("task8_wrongkey.json");
    let out = run(&program, &task.environment(3), &ResourceLimits::default());
    let findings = analyze(&out.trace, &program, "task8_pgp");
    assert_eq!(findings.len(), 1);
    let spanned: Vec<_> = out
        .trace
        .iter()
        .filter(|e| findings[0].trace_span.contains(&e.seq))
        .collect();
    assert!(spanned.iter().any(|e| e.opcode() == Some(Opcode::RsaEncrypt)
        && e.path.to_string() == "/body/2/value"));
}

#[test]
fn rules_only_apply_to_their_tasks() {
    let task = TaskRegistry::builtin().get("task8_pgp").unwrap();
    let program = load("task8_wrongkey.json");
    let out = run(&program, &task.environment(3), &ResourceLimits::default());
    assert!(analyze(&out.trace, &program, "task6_sha256").is_empty());
    let without = RuleCatalog::default().without(FindingCode::ConfidentialityBreach);
    assert!(analyze_with(&without, &out.trace, &program, "task8_pgp").is_empty());
}

#[test]
fn weak_cipher_is_an_extension_rule() {
    let task = TaskRegistry::builtin().get("task1_aes_encrypt").unwrap();
    let program = load("task1_caesar.json");
    let out = run(&program, &task.environment(0), &ResourceLimits::default());
    let codes: Vec<_> = analyze(&out.trace, &program, &task.id).iter().map(|f| f.code).collect();
    assert_eq!(codes, [FindingCode::WeakCipherForConfidentiality]);
    let core_only = RuleCatalog::default().without_extensions();
    assert!(analyze_with(&core_only, &out.trace, &program, &task.id).is_empty());
}

#[test]
fn palette_serializes_opcode_names() {
    let json = serde_json::to_value(palette()).unwrap();
    let names: Vec<_> = json
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|b| b["opcode"].as_str())
        .collect();
    for op in Opcode::ALL {
        assert!(names.contains(&op.name()), "{op:?}");
    }
}
