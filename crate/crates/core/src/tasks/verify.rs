use crate::blocks::Opcode;
use crate::crypto::{self, Direction, Payload, RsaKey};
use crate::interpreter::{dispatch, BlockOutput, DispatchContext, DEFAULT_SEED};
use crate::value::{HexBytes, Value};

use super::{TaskDefinition, Verdict};

/// Ground truth a task's result is checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verifier {
    /// Recompute `opcode(args...)` from the task environment and compare.
    Exact { opcode: Opcode, args: Vec<String> },
    CaesarCryptanalysis { shift: i64, plaintext: String },
    /// `message` names the environment variable holding M.
    Signature { message: String, signer_public: RsaKey },
    Pgp { message: String, recipient_private: RsaKey },
}

impl Verifier {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Verifier::Exact { .. } => "exact",
            Verifier::CaesarCryptanalysis { .. } => "caesar_cryptanalysis",
            Verifier::Signature { .. } => "signature",
            Verifier::Pgp { .. } => "pgp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub verdict: Verdict,
    pub details: Vec<String>,
}

impl Verification {
    fn new(verdict: Verdict, detail: impl Into<String>) -> Self {
        Verification {
            verdict,
            details: vec![detail.into()],
        }
    }

    fn success() -> Self {
        Verification {
            verdict: Verdict::Success,
            details: Vec::new(),
        }
    }
}

pub fn verify(task: &TaskDefinition, result: &Value) -> Verification {
    match &task.verifier {
        Verifier::Exact { opcode, args } => verify_exact(task, *opcode, args, result),
        Verifier::CaesarCryptanalysis { shift, plaintext } => {
            verify_caesar_cryptanalysis(*shift, plaintext, result)
        }
        Verifier::Signature {
            message,
            signer_public,
        } => match task.env.get(message) {
            Some(m) => verify_signature(&m.display_text(), signer_public, result),
            None => Verification::new(Verdict::RuntimeError, "task environment lacks the message"),
        },
        Verifier::Pgp {
            message,
            recipient_private,
        } => match task.env.get(message) {
            Some(m) => verify_pgp(&m.display_text(), recipient_private, result),
            None => Verification::new(Verdict::RuntimeError, "task environment lacks the message"),
        },
    }
}

pub fn verify_exact(
    task: &TaskDefinition,
    opcode: Opcode,
    args: &[String],
    result: &Value,
) -> Verification {
    let inputs: Option<Vec<Value>> = args.iter().map(|a| task.env.get(a).cloned()).collect();
    let Some(inputs) = inputs else {
        return Verification::new(Verdict::RuntimeError, "task environment is incomplete");
    };
    let mut ctx = DispatchContext::new(DEFAULT_SEED, 0, 0);
    let expected = match dispatch(opcode, &inputs, &mut ctx) {
        Ok(BlockOutput::Value(v)) => v,
        Ok(BlockOutput::Keypair { .. }) => {
            return Verification::new(Verdict::RuntimeError, "task expects a single value")
        }
        Err(e) => return Verification::new(Verdict::RuntimeError, format!("task oracle failed: {e}")),
    };
    if expected.kind() != result.kind() {
        return Verification::new(
            Verdict::MalformedResult,
            format!(
                "expected a {} value, got {}",
                expected.kind(),
                result.kind()
            ),
        );
    }
    if &expected == result {
        Verification::success()
    } else {
        Verification::new(Verdict::IncorrectResult, "the result does not match the expected value")
    }
}

pub fn verify_caesar_cryptanalysis(shift: i64, plaintext: &str, result: &Value) -> Verification {
    let guess = match result {
        Value::Integer(n) => *n,
        Value::Text(t) if t == plaintext => return Verification::success(),
        Value::Text(t) => match t.trim().parse::<i64>() {
            Ok(n) => n,
            Err(_) => {
                return Verification::new(
                    Verdict::IncorrectResult,
                    "the decrypted text is not the original message",
                )
            }
        },
        other => {
            return Verification::new(
                Verdict::MalformedResult,
                format!("expected a shift (0-25) or the decrypted text, got {}", other.kind()),
            )
        }
    };
    if !(0..26).contains(&guess) {
        return Verification::new(
            Verdict::MalformedResult,
            format!("shift {guess} is outside 0-25"),
        );
    }
    if guess == shift.rem_euclid(26) {
        Verification::success()
    } else {
        Verification::new(
            Verdict::IncorrectResult,
            format!(
                "shift {guess} decrypts to {:?}",
                crypto::caesar_shift(
                    &crypto::caesar_shift(plaintext, shift, Direction::Encrypt),
                    guess,
                    Direction::Decrypt
                )
            ),
        )
    }
}

fn text_result(result: &Value) -> Result<&str, Verification> {
    match result {
        Value::Text(t) if !t.is_empty() => Ok(t),
        Value::Text(_) => Err(Verification::new(Verdict::MalformedResult, "the result is empty")),
        other => Err(Verification::new(
            Verdict::MalformedResult,
            format!("expected text joined with \"|\", got {}", other.kind()),
        )),
    }
}

fn payload_text(p: Payload) -> String {
    match p {
        Payload::Text(t) => t,
        Payload::Hex(h) => h.as_str().to_owned(),
    }
}

pub fn verify_signature(message: &str, signer_public: &RsaKey, result: &Value) -> Verification {
    let text = match text_result(result) {
        Ok(t) => t,
        Err(v) => return v,
    };
    let Some((left, right)) = text.rsplit_once('|') else {
        return Verification::new(
            Verdict::MalformedResult,
            "no \"|\" separates the message from the signature",
        );
    };
    let Ok(signature) = HexBytes::parse(right) else {
        return Verification::new(Verdict::MalformedResult, "the signature part is not hex");
    };
    let digest = crypto::sha256_hex(left).hex;
    let recovered = match crypto::rsa_unapply(&signature, signer_public) {
        Ok(p) => payload_text(p).to_ascii_lowercase(),
        Err(e) => {
            return Verification::new(
                Verdict::IncorrectResult,
                format!("the signature does not open with the signer's public key: {e}"),
            )
        }
    };
    if recovered != digest.as_str() {
        return Verification::new(
            Verdict::IncorrectResult,
            "the signature does not contain the SHA-256 hash of the message part",
        );
    }
    if left != message {
        return Verification::new(
            Verdict::IncorrectResult,
            "the signature is valid, but the signed message is not the task's message",
        );
    }
    Verification::success()
}

pub fn verify_pgp(message: &str, recipient_private: &RsaKey, result: &Value) -> Verification {
    let text = match text_result(result) {
        Ok(t) => t,
        Err(v) => return v,
    };
    let Some((left, right)) = text.split_once('|') else {
        return Verification::new(
            Verdict::MalformedResult,
            "no \"|\" separates the encrypted message from the encrypted key",
        );
    };
    let Ok(wrapped_key) = HexBytes::parse(right) else {
        return Verification::new(Verdict::IncorrectResult, "the encrypted key part is not hex");
    };
    let Ok(ciphertext) = HexBytes::parse(left) else {
        return Verification::new(
            Verdict::IncorrectResult,
            "the message part is not AES ciphertext",
        );
    };
    let session_key = match crypto::rsa_unapply(&wrapped_key, recipient_private) {
        Ok(p) => payload_text(p),
        Err(e) => {
            return Verification::new(
                Verdict::IncorrectResult,
                format!("the recipient cannot decrypt the key part: {e}"),
            )
        }
    };
    match crypto::aes_ecb_decrypt(&ciphertext, &session_key) {
        Ok(m) if m == message => Verification::success(),
        Ok(_) => Verification::new(
            Verdict::IncorrectResult,
            "the recovered message is not the task's message",
        ),
        Err(e) => Verification::new(
            Verdict::IncorrectResult,
            format!("the recovered key does not decrypt the message part: {e}"),
        ),
    }
}
