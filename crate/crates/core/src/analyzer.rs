//! Misuse detection over execution traces.
//!
//! Values are linked to the events that produced them by content equality,
//! so a literal that happens to equal some block's output is treated as
//! flowing from it. This over-approximates real dataflow; rules only look at
//! events that can reach the task's result.

use std::collections::{BTreeSet, HashMap};

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::blocks::Opcode;
use crate::crypto::KeyRole;
use crate::interpreter::{EventKind, TraceEvent};
use crate::program::BlockProgram;
use crate::value::Value;

pub const TASK_AES_ENCRYPT: &str = "task1_aes_encrypt";
pub const TASK_RSA_ENCRYPT: &str = "task4_rsa_encrypt";
pub const TASK_SIGNATURE: &str = "task7_signature";
pub const TASK_PGP: &str = "task8_pgp";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    ConfidentialityBreach,
    AuthenticationFlaw,
    SignatureSpoofingRisk,
    WeakCipherForConfidentiality,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::ConfidentialityBreach => "CONFIDENTIALITY_BREACH",
            FindingCode::AuthenticationFlaw => "AUTHENTICATION_FLAW",
            FindingCode::SignatureSpoofingRisk => "SIGNATURE_SPOOFING_RISK",
            FindingCode::WeakCipherForConfidentiality => "WEAK_CIPHER_FOR_CONFIDENTIALITY",
        }
    }

    /// Flaws that defeat the scheme's purpose outright.
    pub fn breaks_scheme(self) -> bool {
        self != FindingCode::WeakCipherForConfidentiality
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: Severity,
    pub message: String,
    pub trace_span: Vec<u64>,
}

impl Serialize for Finding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Finding", 3)?;
        st.serialize_field("code", &self.code)?;
        st.serialize_field("message", &self.message)?;
        st.serialize_field("trace_span", &self.trace_span)?;
        st.end()
    }
}

/// Events reachable backwards from a value, through producer links.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Origins {
    pub events: BTreeSet<u64>,
}

impl Origins {
    pub fn opcodes<'t>(
        &self,
        trace: &'t [TraceEvent],
    ) -> impl Iterator<Item = (Opcode, Option<KeyRole>)> + 't {
        let events = self.events.clone();
        trace
            .iter()
            .filter(move |e| events.contains(&e.seq))
            .filter_map(|e| e.opcode().map(|op| (op, e.key.as_ref().map(|k| k.role))))
    }

    pub fn events_with<'t>(
        &'t self,
        trace: &'t [TraceEvent],
        op: Opcode,
    ) -> impl Iterator<Item = u64> + 't {
        trace
            .iter()
            .filter(move |e| self.events.contains(&e.seq) && e.opcode() == Some(op))
            .map(|e| e.seq)
    }
}

/// Indexes producers by output value.
struct ProducerIndex<'t> {
    by_value: HashMap<&'t Value, Vec<u64>>,
}

impl<'t> ProducerIndex<'t> {
    fn new(trace: &'t [TraceEvent]) -> Self {
        let mut by_value: HashMap<&Value, Vec<u64>> = HashMap::new();
        for e in trace.iter().filter(|e| e.kind != EventKind::Result) {
            for r in &e.results {
                by_value.entry(r).or_default().push(e.seq);
            }
        }
        ProducerIndex { by_value }
    }

    fn origins(&self, trace: &[TraceEvent], start: u64) -> Origins {
        let mut seen = BTreeSet::new();
        let mut work = vec![start];
        while let Some(seq) = work.pop() {
            if !seen.insert(seq) {
                continue;
            }
            let Some(event) = trace.get(seq as usize) else {
                continue;
            };
            for a in &event.args {
                for &p in self.by_value.get(a).map(Vec::as_slice).unwrap_or(&[]) {
                    if p < seq && !seen.contains(&p) {
                        work.push(p);
                    }
                }
            }
        }
        Origins { events: seen }
    }
}

/// Every event whose output may have fed `value_event` (inclusive).
pub fn dataflow_origin(value_event: u64, trace: &[TraceEvent]) -> Origins {
    ProducerIndex::new(trace).origins(trace, value_event)
}

/// What a rule's matcher sees.
pub struct RuleInput<'t> {
    pub trace: &'t [TraceEvent],
    pub program: &'t BlockProgram,
    /// Events that can reach the task result (all events when there is none).
    pub scope: BTreeSet<u64>,
    index: ProducerIndex<'t>,
}

impl<'t> RuleInput<'t> {
    pub fn origins(&self, seq: u64) -> Origins {
        self.index.origins(self.trace, seq)
    }

    pub fn scoped(&self) -> impl Iterator<Item = &'t TraceEvent> + '_ {
        self.trace.iter().filter(|e| self.scope.contains(&e.seq))
    }
}

pub type Matcher = fn(&RuleInput<'_>) -> Option<BTreeSet<u64>>;

#[derive(Clone)]
pub struct MisuseRule {
    pub code: FindingCode,
    pub applicable_tasks: &'static [&'static str],
    pub message: &'static str,
    /// Checks beyond the confidentiality-breach/authentication/spoofing trio.
    pub extension: bool,
    pub matcher: Matcher,
}

impl std::fmt::Debug for MisuseRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MisuseRule")
            .field("code", &self.code)
            .field("applicable_tasks", &self.applicable_tasks)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct RuleCatalog {
    rules: Vec<MisuseRule>,
}

impl Default for RuleCatalog {
    fn default() -> Self {
        RuleCatalog {
            rules: vec![
                MisuseRule {
                    code: FindingCode::ConfidentialityBreach,
                    applicable_tasks: &[TASK_PGP],
                    message: "The session key was encrypted with a private key, which turns the scheme into \
                              K{M}|[K]_A. Anyone with the matching public key can unlock K and then read M. \
                              Encrypt K with the recipient's public key instead: K{M}|{K}_B.",
                    extension: false,
                    matcher: session_key_under_private_key,
                },
                MisuseRule {
                    code: FindingCode::AuthenticationFlaw,
                    applicable_tasks: &[TASK_SIGNATURE],
                    message: "The hash was encrypted with a public key. Anyone can use a public key, so this \
                              does not prove who sent the message. Sign with the sender's private key: M|[H(M)]_A.",
                    extension: false,
                    matcher: digest_under_public_key,
                },
                MisuseRule {
                    code: FindingCode::SignatureSpoofingRisk,
                    applicable_tasks: &[TASK_SIGNATURE],
                    message: "The signature covers a CRC32 checksum. CRC32 collisions are easy to find, so a \
                              forged message could reuse this signature. Hash with SHA-256 before signing.",
                    extension: false,
                    matcher: crc32_digest_signed,
                },
                MisuseRule {
                    code: FindingCode::WeakCipherForConfidentiality,
                    applicable_tasks: &[TASK_AES_ENCRYPT, TASK_RSA_ENCRYPT, TASK_PGP],
                    message: "This result is protected by a Caesar cipher. With only 26 shifts it can be broken \
                              by trying them all. Use AES or RSA to keep data secret.",
                    extension: true,
                    matcher: caesar_for_secrecy,
                },
            ],
        }
    }
}

impl RuleCatalog {
    pub fn rules(&self) -> &[MisuseRule] {
        &self.rules
    }

    pub fn without(mut self, code: FindingCode) -> Self {
        self.rules.retain(|r| r.code != code);
        self
    }

    pub fn without_extensions(mut self) -> Self {
        self.rules.retain(|r| !r.extension);
        self
    }

    pub fn empty() -> Self {
        RuleCatalog { rules: Vec::new() }
    }

    pub fn applicable_codes(&self, task_id: &str) -> Vec<FindingCode> {
        self.rules
            .iter()
            .filter(|r| r.applicable_tasks.contains(&task_id))
            .map(|r| r.code)
            .collect()
    }
}

/// Runs the default rule catalog.
pub fn analyze(trace: &[TraceEvent], program: &BlockProgram, task_id: &str) -> Vec<Finding> {
    analyze_with(&RuleCatalog::default(), trace, program, task_id)
}

pub fn analyze_with(
    catalog: &RuleCatalog,
    trace: &[TraceEvent],
    program: &BlockProgram,
    task_id: &str,
) -> Vec<Finding> {
    let index = ProducerIndex::new(trace);
    let scope = match trace.iter().rev().find(|e| e.kind == EventKind::Result) {
        Some(result) => index.origins(trace, result.seq).events,
        None => trace.iter().map(|e| e.seq).collect(),
    };
    let input = RuleInput {
        trace,
        program,
        scope,
        index,
    };

    let mut findings: Vec<(usize, Finding)> = catalog
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.applicable_tasks.contains(&task_id))
        .filter_map(|(i, r)| {
            let span = (r.matcher)(&input)?;
            Some((
                i,
                Finding {
                    code: r.code,
                    severity: Severity::Warning,
                    message: r.message.to_owned(),
                    trace_span: span.into_iter().collect(),
                },
            ))
        })
        .collect();
    findings.sort_by_key(|(i, f)| (f.trace_span.first().copied(), *i));
    findings.into_iter().map(|(_, f)| f).collect()
}

fn rsa_encrypt_events<'a>(input: &'a RuleInput<'_>) -> impl Iterator<Item = &'a TraceEvent> + 'a {
    input
        .scoped()
        .filter(|e| e.opcode() == Some(Opcode::RsaEncrypt))
}

fn nonempty(span: BTreeSet<u64>) -> Option<BTreeSet<u64>> {
    (!span.is_empty()).then_some(span)
}

fn session_key_under_private_key(input: &RuleInput<'_>) -> Option<BTreeSet<u64>> {
    let mut session_keys: HashMap<String, Vec<u64>> = HashMap::new();
    for e in input.trace {
        let key = match e.opcode() {
            Some(Opcode::AesEncrypt) => e.args.get(1),
            Some(Opcode::RandomKey) => e.results.first(),
            _ => None,
        };
        if let Some(text) = key.and_then(Value::render_text) {
            session_keys.entry(text).or_default().push(e.seq);
        }
    }
    let mut span = BTreeSet::new();
    for e in rsa_encrypt_events(input) {
        if e.key.as_ref().map(|k| k.role) != Some(KeyRole::Private) {
            continue;
        }
        let Some(msg) = e.args.first().and_then(Value::render_text) else {
            continue;
        };
        if let Some(sources) = session_keys.get(&msg) {
            span.insert(e.seq);
            span.extend(sources.iter().filter(|s| input.scope.contains(s)));
        }
    }
    nonempty(span)
}

fn signed_digests(
    input: &RuleInput<'_>,
    role: Option<KeyRole>,
    hashes: &[Opcode],
) -> Option<BTreeSet<u64>> {
    let mut span = BTreeSet::new();
    for e in rsa_encrypt_events(input) {
        if role.is_some() && e.key.as_ref().map(|k| k.role) != role {
            continue;
        }
        let origins = input.origins(e.seq);
        let digests: Vec<u64> = hashes
            .iter()
            .flat_map(|&h| origins.events_with(input.trace, h))
            .collect();
        if !digests.is_empty() {
            span.insert(e.seq);
            span.extend(digests);
        }
    }
    nonempty(span)
}

fn digest_under_public_key(input: &RuleInput<'_>) -> Option<BTreeSet<u64>> {
    signed_digests(
        input,
        Some(KeyRole::Public),
        &[Opcode::Sha256, Opcode::Crc32],
    )
}

fn crc32_digest_signed(input: &RuleInput<'_>) -> Option<BTreeSet<u64>> {
    signed_digests(input, None, &[Opcode::Crc32])
}

fn caesar_for_secrecy(input: &RuleInput<'_>) -> Option<BTreeSet<u64>> {
    nonempty(
        input
            .scoped()
            .filter(|e| e.opcode() == Some(Opcode::CaesarEncrypt))
            .map(|e| e.seq)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpreter::{run, Environment, ResourceLimits};
    use crate::program::{Expression, Statement};
    use crate::value::HexBytes;

    fn event(seq: u64, kind: EventKind, args: Vec<Value>, result: Value) -> TraceEvent {
        TraceEvent {
            seq,
            kind,
            path: Default::default(),
            args,
            results: vec![result],
            key: None,
        }
    }

    fn hex(s: &str) -> Value {
        Value::Hex(HexBytes::parse(s).unwrap())
    }

    #[test]
    fn two_step_chain() {
        let key = crate::crypto::RsaKeypair::generate_seeded(512, "A", 5).unwrap();
        let env = Environment::new().bind("priv", key.private_key());
        let p = BlockProgram::new(
            None,
            vec![Statement::set(
                "sig",
                Expression::crypto(
                    Opcode::RsaEncrypt,
                    vec![
                        Expression::crypto(Opcode::Sha256, vec![Expression::text("m")]),
                        Expression::var("priv"),
                    ],
                ),
            )],
        );
        let out = run(&p, &env, &ResourceLimits::default());
        let last = out.trace.last().unwrap().seq;
        let ops: BTreeSet<_> = dataflow_origin(last, &out.trace)
            .opcodes(&out.trace)
            .collect();
        assert_eq!(
            ops,
            [
                (Opcode::Sha256, None),
                (Opcode::RsaEncrypt, Some(KeyRole::Private))
            ]
            .into()
        );
    }

    #[test]
    fn join_reaches_both_operands() {
        let trace = vec![
            event(
                0,
                EventKind::Crypto(Opcode::Sha256),
                vec![Value::text("a")],
                hex("aa"),
            ),
            event(
                1,
                EventKind::Crypto(Opcode::Crc32),
                vec![Value::text("b")],
                hex("bb"),
            ),
            event(
                2,
                EventKind::Join,
                vec![hex("aa"), hex("bb")],
                Value::text("aabb"),
            ),
        ];
        assert_eq!(dataflow_origin(2, &trace).events, [0, 1, 2].into());
    }

    #[test]
    fn equal_content_counts_every_producer() {
        let trace = vec![
            event(
                0,
                EventKind::Crypto(Opcode::Sha256),
                vec![Value::text("x")],
                hex("cc"),
            ),
            event(
                1,
                EventKind::Crypto(Opcode::Crc32),
                vec![Value::text("y")],
                hex("cc"),
            ),
            event(
                2,
                EventKind::Crypto(Opcode::Sha256),
                vec![hex("cc")],
                hex("dd"),
            ),
        ];
        assert_eq!(dataflow_origin(2, &trace).events, [0, 1, 2].into());
        // producers must precede the consumer
        assert_eq!(dataflow_origin(0, &trace).events, [0].into());
    }

    #[test]
    fn catalog_rule_isolation() {
        let full = RuleCatalog::default();
        assert_eq!(
            full.applicable_codes(TASK_SIGNATURE),
            [
                FindingCode::AuthenticationFlaw,
                FindingCode::SignatureSpoofingRisk
            ]
        );
        let trimmed = full.without(FindingCode::AuthenticationFlaw);
        assert_eq!(
            trimmed.applicable_codes(TASK_SIGNATURE),
            [FindingCode::SignatureSpoofingRisk]
        );
        assert!(RuleCatalog::default()
            .without_extensions()
            .applicable_codes(TASK_AES_ENCRYPT)
            .is_empty());
    }
}
