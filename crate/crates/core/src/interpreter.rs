//! Tree-walking evaluator that records every crypto block it runs.

use std::collections::BTreeMap;

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::blocks::{Opcode, ParamKind};
use crate::crypto::rsa::{chunk_count, DEFAULT_KEY_BITS};
use crate::crypto::{self, CryptoError, Direction, KeyRole, Payload, RsaKey, RsaKeypair};
use crate::program::{AstPath, BlockProgram, Expression, Literal, Statement};
use crate::value::{HexBytes, Value, ValueKind};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0;
pub const RANDOM_KEY_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub bindings: BTreeMap<String, Value>,
    pub randomness_seed: Option<u64>,
    pub rsa_key_bits: u64,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            bindings: BTreeMap::new(),
            randomness_seed: None,
            rsa_key_bits: DEFAULT_KEY_BITS,
        }
    }
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.randomness_seed = Some(seed);
        self
    }

    pub fn bind(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.bindings.insert(name.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceLimits {
    pub max_steps: u64,
    pub max_value_bytes: usize,
    pub max_keygens: u32,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits {
            max_steps: 100_000,
            max_value_bytes: 1 << 20,
            max_keygens: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Completed,
    RuntimeError { detail: String },
    ResourceLimit { detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Crypto(Opcode),
    Join,
    /// The task block reading the result variable after the run.
    Result,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyProvenance {
    pub owner: String,
    pub role: KeyRole,
    pub key_id: String,
}

impl From<&RsaKey> for KeyProvenance {
    fn from(k: &RsaKey) -> Self {
        KeyProvenance {
            owner: k.owner.clone(),
            role: k.role,
            key_id: k.key_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub path: AstPath,
    pub args: Vec<Value>,
    pub results: Vec<Value>,
    /// Set for RSA blocks: the key that was applied.
    pub key: Option<KeyProvenance>,
}

impl TraceEvent {
    pub fn opcode(&self) -> Option<Opcode> {
        match self.kind {
            EventKind::Crypto(op) => Some(op),
            _ => None,
        }
    }
}

impl Serialize for TraceEvent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TraceEvent", 7)?;
        st.serialize_field("args", &self.args)?;
        st.serialize_field("key", &self.key)?;
        let (kind, opcode) = match self.kind {
            EventKind::Crypto(op) => ("crypto", Some(op)),
            EventKind::Join => ("join", None),
            EventKind::Result => ("result", None),
        };
        st.serialize_field("kind", kind)?;
        st.serialize_field("opcode", &opcode)?;
        st.serialize_field("path", &self.path)?;
        st.serialize_field("results", &self.results)?;
        st.serialize_field("seq", &self.seq)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_bindings: BTreeMap<String, Value>,
    pub trace: Vec<TraceEvent>,
    pub say_outputs: Vec<String>,
    pub seed: u64,
    pub steps: u64,
}

impl RunOutcome {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn crypto_event_count(&self) -> usize {
        self.trace.iter().filter(|e| e.opcode().is_some()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run outcome serializes")
    }
}

/// What a crypto block hands back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockOutput {
    Value(Value),
    Keypair { public: RsaKey, private: RsaKey },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DispatchError {
    #[error("unknown opcode {0:?}")]
    UnknownOpcode(String),
    #[error("{opcode} takes {expected} argument(s), got {found}")]
    Arity {
        opcode: Opcode,
        expected: usize,
        found: usize,
    },
    #[error("{opcode} argument {index} cannot be {found} (expects {expected:?})")]
    Kind {
        opcode: Opcode,
        index: usize,
        expected: ParamKind,
        found: ValueKind,
    },
    #[error("{opcode}: {source}")]
    Crypto { opcode: Opcode, source: CryptoError },
    #[error("too many RSA key generations in one run")]
    KeygenBudgetExhausted,
}

/// Randomness and key-size settings shared by the blocks of one run.
pub struct DispatchContext {
    rng: ChaCha20Rng,
    rsa_key_bits: u64,
    keygens_left: u32,
}

impl DispatchContext {
    pub fn new(seed: u64, rsa_key_bits: u64, max_keygens: u32) -> Self {
        DispatchContext {
            rng: ChaCha20Rng::seed_from_u64(seed),
            rsa_key_bits,
            keygens_left: max_keygens,
        }
    }
}

/// Runs one crypto block by name.
pub fn crypto_dispatch(
    opcode: &str,
    args: &[Value],
    ctx: &mut DispatchContext,
) -> Result<BlockOutput, DispatchError> {
    let op: Opcode = opcode
        .parse()
        .map_err(|_| DispatchError::UnknownOpcode(opcode.to_owned()))?;
    dispatch(op, args, ctx)
}

pub fn dispatch(
    op: Opcode,
    args: &[Value],
    ctx: &mut DispatchContext,
) -> Result<BlockOutput, DispatchError> {
    if args.len() != op.arity() {
        return Err(DispatchError::Arity {
            opcode: op,
            expected: op.arity(),
            found: args.len(),
        });
    }
    let arg = |i: usize| Arg {
        op,
        index: i,
        value: &args[i],
    };
    let crypto_err = |source| DispatchError::Crypto { opcode: op, source };
    let value = match op {
        Opcode::CaesarEncrypt | Opcode::CaesarDecrypt => {
            let dir = if op == Opcode::CaesarEncrypt {
                Direction::Encrypt
            } else {
                Direction::Decrypt
            };
            Value::Text(crypto::caesar_shift(
                &arg(0).text()?,
                arg(1).integer()?,
                dir,
            ))
        }
        Opcode::AesEncrypt => Value::Hex(
            crypto::aes_ecb_encrypt(&arg(0).text()?, &arg(1).passphrase()?).map_err(crypto_err)?,
        ),
        Opcode::AesDecrypt => {
            let ct = arg(0).hex()?;
            Value::Text(crypto::aes_ecb_decrypt(&ct, &arg(1).passphrase()?).map_err(crypto_err)?)
        }
        Opcode::RsaEncrypt => {
            let key = arg(1).rsa_key()?;
            Value::Hex(crypto::rsa_apply(&arg(0).payload()?, key).map_err(crypto_err)?)
        }
        Opcode::RsaDecrypt => {
            let key = arg(1).rsa_key()?;
            match crypto::rsa_unapply(&arg(0).hex()?, key).map_err(crypto_err)? {
                Payload::Text(s) => Value::Text(s),
                Payload::Hex(h) => Value::Hex(h),
            }
        }
        Opcode::Sha256 => Value::Hex(crypto::sha256_hex(&arg(0).text()?).hex),
        Opcode::Crc32 => Value::Hex(crypto::crc32_hex(&arg(0).text()?).hex),
        Opcode::RandomKey => Value::Text(
            (&mut ctx.rng)
                .sample_iter(Alphanumeric)
                .take(RANDOM_KEY_LEN)
                .map(char::from)
                .collect(),
        ),
        Opcode::RsaGenerateKeypair => {
            let owner = arg(0).text()?;
            if ctx.keygens_left == 0 {
                return Err(DispatchError::KeygenBudgetExhausted);
            }
            ctx.keygens_left -= 1;
            let kp =
                RsaKeypair::generate(ctx.rsa_key_bits, &owner, &mut ctx.rng).map_err(crypto_err)?;
            return Ok(BlockOutput::Keypair {
                public: kp.public_key(),
                private: kp.private_key(),
            });
        }
    };
    Ok(BlockOutput::Value(value))
}

struct Arg<'a> {
    op: Opcode,
    index: usize,
    value: &'a Value,
}

impl<'a> Arg<'a> {
    fn kind_err(&self, expected: ParamKind) -> DispatchError {
        DispatchError::Kind {
            opcode: self.op,
            index: self.index,
            expected,
            found: self.value.kind(),
        }
    }

    fn text(&self) -> Result<String, DispatchError> {
        self.value
            .render_text()
            .ok_or_else(|| self.kind_err(ParamKind::Text))
    }

    fn integer(&self) -> Result<i64, DispatchError> {
        match self.value {
            Value::Integer(i) => Ok(*i),
            _ => Err(self.kind_err(ParamKind::Integer)),
        }
    }

    fn passphrase(&self) -> Result<String, DispatchError> {
        match self.value {
            Value::RsaKey(k) => Ok(k.export_text()),
            other => Ok(other.render_text().expect("non-key values render")),
        }
    }

    fn hex(&self) -> Result<HexBytes, DispatchError> {
        match self.value {
            Value::Hex(h) => Ok(h.clone()),
            Value::Text(_) | Value::Integer(_) => {
                let text = self.value.render_text().expect("renders");
                HexBytes::parse(&text).map_err(|e| DispatchError::Crypto {
                    opcode: self.op,
                    source: CryptoError::MalformedCiphertext(e.to_string()),
                })
            }
            _ => Err(self.kind_err(ParamKind::HexInput)),
        }
    }

    fn payload(&self) -> Result<Payload, DispatchError> {
        match self.value {
            Value::Hex(h) => Ok(Payload::Hex(h.clone())),
            Value::RsaKey(_) => Err(self.kind_err(ParamKind::Message)),
            other => Ok(Payload::Text(other.render_text().expect("renders"))),
        }
    }

    fn rsa_key(&self) -> Result<&'a RsaKey, DispatchError> {
        match self.value {
            Value::RsaKey(k) => Ok(k),
            _ => Err(self.kind_err(ParamKind::RsaKey)),
        }
    }
}

enum Halt {
    Runtime(String),
    Limit(String),
}

impl From<DispatchError> for Halt {
    fn from(e: DispatchError) -> Self {
        match e {
            DispatchError::KeygenBudgetExhausted => Halt::Limit(e.to_string()),
            other => Halt::Runtime(other.to_string()),
        }
    }
}

struct Machine<'a> {
    vars: BTreeMap<String, Value>,
    trace: Vec<TraceEvent>,
    say: Vec<String>,
    steps: u64,
    limits: &'a ResourceLimits,
    ctx: DispatchContext,
}

/// Executes `program` against `env`. Never panics on learner input: every
/// failure ends up in the returned status.
pub fn run(program: &BlockProgram, env: &Environment, limits: &ResourceLimits) -> RunOutcome {
    let seed = env.randomness_seed.unwrap_or(DEFAULT_SEED);
    let mut m = Machine {
        vars: env.bindings.clone(),
        trace: Vec::new(),
        say: Vec::new(),
        steps: 0,
        limits,
        ctx: DispatchContext::new(seed, env.rsa_key_bits, limits.max_keygens),
    };
    let mut result = m.block(program.body(), &AstPath::root().key("body"));
    if result.is_ok() {
        if let Some(task) = program.task() {
            match m.vars.get(&task.result_variable) {
                Some(v) => {
                    let v = v.clone();
                    m.record(
                        EventKind::Result,
                        AstPath::root().key("task").key("result_variable"),
                        vec![v.clone()],
                        vec![v],
                        None,
                    );
                }
                None => {
                    result = Err(Halt::Runtime(format!(
                        "result variable {:?} was never set",
                        task.result_variable
                    )))
                }
            }
        }
    }
    let status = match result {
        Ok(()) => RunStatus::Completed,
        Err(Halt::Runtime(detail)) => RunStatus::RuntimeError { detail },
        Err(Halt::Limit(detail)) => RunStatus::ResourceLimit { detail },
    };
    RunOutcome {
        status,
        final_bindings: m.vars,
        trace: m.trace,
        say_outputs: m.say,
        seed,
        steps: m.steps,
    }
}

impl Machine<'_> {
    fn tick(&mut self, cost: u64) -> Result<(), Halt> {
        self.steps = self.steps.saturating_add(cost);
        if self.steps > self.limits.max_steps {
            return Err(Halt::Limit(format!(
                "step limit of {} exceeded",
                self.limits.max_steps
            )));
        }
        Ok(())
    }

    fn check_size(&self, v: &Value) -> Result<(), Halt> {
        if v.size_hint() > self.limits.max_value_bytes {
            return Err(Halt::Limit(format!(
                "value of {} bytes exceeds the {}-byte limit",
                v.size_hint(),
                self.limits.max_value_bytes
            )));
        }
        Ok(())
    }

    fn record(
        &mut self,
        kind: EventKind,
        path: AstPath,
        args: Vec<Value>,
        results: Vec<Value>,
        key: Option<KeyProvenance>,
    ) {
        let seq = self.trace.len() as u64;
        self.trace.push(TraceEvent {
            seq,
            kind,
            path,
            args,
            results,
            key,
        });
    }

    fn block(&mut self, stmts: &[Statement], path: &AstPath) -> Result<(), Halt> {
        for (i, s) in stmts.iter().enumerate() {
            self.statement(s, &path.index(i))?;
        }
        Ok(())
    }

    fn statement(&mut self, s: &Statement, path: &AstPath) -> Result<(), Halt> {
        self.tick(1)?;
        match s {
            Statement::Set { name, value } => {
                let v = self.eval(value, &path.key("value"))?;
                self.vars.insert(name.clone(), v);
            }
            Statement::Change { name, by } => {
                let delta = self.eval(by, &path.key("by"))?;
                let current = self
                    .vars
                    .get(name)
                    .ok_or_else(|| Halt::Runtime(format!("variable {name:?} is not set")))?;
                let (Value::Integer(a), Value::Integer(b)) = (current, &delta) else {
                    return Err(Halt::Runtime(format!(
                        "change needs integers, got {} and {}",
                        current.kind(),
                        delta.kind()
                    )));
                };
                let sum = a
                    .checked_add(*b)
                    .ok_or_else(|| Halt::Runtime("integer overflow".into()))?;
                self.vars.insert(name.clone(), Value::Integer(sum));
            }
            Statement::Repeat { count, body } => {
                let n = match self.eval(count, &path.key("count"))? {
                    Value::Integer(n) if n >= 0 => n,
                    Value::Integer(n) => {
                        return Err(Halt::Runtime(format!("repeat count {n} is negative")))
                    }
                    other => {
                        return Err(Halt::Runtime(format!(
                            "repeat count must be an integer, got {}",
                            other.kind()
                        )))
                    }
                };
                let body_path = path.key("body");
                for _ in 0..n {
                    self.tick(1)?;
                    self.block(body, &body_path)?;
                }
            }
            Statement::IfElse {
                condition,
                then_branch,
                else_branch,
            } => match self.eval(condition, &path.key("condition"))? {
                Value::Boolean(true) => self.block(then_branch, &path.key("then"))?,
                Value::Boolean(false) => self.block(else_branch, &path.key("else"))?,
                other => {
                    return Err(Halt::Runtime(format!(
                        "if condition must be a boolean, got {}",
                        other.kind()
                    )))
                }
            },
            Statement::Say(e) => {
                let v = self.eval(e, &path.key("value"))?;
                self.say.push(v.display_text());
            }
            Statement::SetKeypair {
                owner,
                public,
                private,
            } => {
                let owner_v = self.eval(owner, &path.key("owner"))?;
                let args = vec![owner_v];
                match dispatch(Opcode::RsaGenerateKeypair, &args, &mut self.ctx)? {
                    BlockOutput::Keypair {
                        public: pk,
                        private: sk,
                    } => {
                        let results = vec![Value::RsaKey(pk.clone()), Value::RsaKey(sk.clone())];
                        self.record(
                            EventKind::Crypto(Opcode::RsaGenerateKeypair),
                            path.clone(),
                            args,
                            results,
                            None,
                        );
                        self.vars.insert(public.clone(), Value::RsaKey(pk));
                        self.vars.insert(private.clone(), Value::RsaKey(sk));
                    }
                    BlockOutput::Value(_) => unreachable!("keypair opcode yields a keypair"),
                }
            }
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expression, path: &AstPath) -> Result<Value, Halt> {
        self.tick(1)?;
        let v = match e {
            Expression::Literal(Literal::Text(s)) => Value::Text(s.clone()),
            Expression::Literal(Literal::Integer(i)) => Value::Integer(*i),
            Expression::Literal(Literal::Boolean(b)) => Value::Boolean(*b),
            Expression::Var(name) => self
                .vars
                .get(name)
                .cloned()
                .ok_or_else(|| Halt::Runtime(format!("variable {name:?} is not set")))?,
            Expression::Join(l, r) => {
                let lv = self.eval(l, &path.key("left"))?;
                let rv = self.eval(r, &path.key("right"))?;
                let (Some(ls), Some(rs)) = (lv.render_text(), rv.render_text()) else {
                    return Err(Halt::Runtime("join cannot use an RSA key as text".into()));
                };
                if ls.len() + rs.len() > self.limits.max_value_bytes {
                    return Err(Halt::Limit(format!(
                        "joined text exceeds the {}-byte limit",
                        self.limits.max_value_bytes
                    )));
                }
                let out = Value::Text(ls + &rs);
                self.record(
                    EventKind::Join,
                    path.clone(),
                    vec![lv, rv],
                    vec![out.clone()],
                    None,
                );
                out
            }
            Expression::Equals(l, r) => {
                let lv = self.eval(l, &path.key("left"))?;
                let rv = self.eval(r, &path.key("right"))?;
                Value::Boolean(blocks_equal(&lv, &rv))
            }
            Expression::Contains { haystack, needle } => {
                let h = self.eval(haystack, &path.key("haystack"))?;
                let n = self.eval(needle, &path.key("needle"))?;
                let (Some(hs), Some(ns)) = (h.render_text(), n.render_text()) else {
                    return Err(Halt::Runtime(
                        "contains cannot use an RSA key as text".into(),
                    ));
                };
                Value::Boolean(hs.contains(&ns))
            }
            Expression::Crypto { opcode, args } => {
                if opcode.is_statement_only() {
                    return Err(Halt::Runtime(format!(
                        "{opcode} must be used through set_keypair"
                    )));
                }
                let args_path = path.key("args");
                let mut values = Vec::with_capacity(args.len());
                for (i, a) in args.iter().enumerate() {
                    values.push(self.eval(a, &args_path.index(i))?);
                }
                self.tick(self.block_cost(*opcode, &values))?;
                let key = match (opcode, values.get(1)) {
                    (Opcode::RsaEncrypt | Opcode::RsaDecrypt, Some(Value::RsaKey(k))) => {
                        Some(KeyProvenance::from(k))
                    }
                    _ => None,
                };
                let out = match dispatch(*opcode, &values, &mut self.ctx)? {
                    BlockOutput::Value(v) => v,
                    BlockOutput::Keypair { .. } => unreachable!("only set_keypair generates keys"),
                };
                self.record(
                    EventKind::Crypto(*opcode),
                    path.clone(),
                    values,
                    vec![out.clone()],
                    key,
                );
                out
            }
        };
        self.check_size(&v)?;
        Ok(v)
    }

    /// Extra steps charged for blocks whose work grows with input size.
    fn block_cost(&self, op: Opcode, args: &[Value]) -> u64 {
        let len = args.first().map(Value::size_hint).unwrap_or(0);
        match (op, args.get(1)) {
            (Opcode::RsaEncrypt, Some(Value::RsaKey(k))) => chunk_count(len, k).unwrap_or(0) as u64,
            (Opcode::RsaDecrypt, Some(Value::RsaKey(k))) => {
                (len / (2 * k.modulus_bytes()).max(1)) as u64
            }
            _ => (len / 1024) as u64,
        }
    }
}

/// `=` block semantics: kinds must match, except that text and hex compare
/// by their text rendering.
pub fn blocks_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Text(_) | Value::Hex(_), Value::Text(_) | Value::Hex(_)) => {
            a.render_text() == b.render_text()
        }
        _ => a == b,
    }
}
