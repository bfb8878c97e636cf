//! Runtime values flowing between blocks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::rsa::RsaKey;

/// Lowercase, even-length hex text. Every hex-producing block returns one of
/// these, so the invariant holds for every value in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct HexBytes(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a hex byte string: {0}")]
pub struct HexError(pub String);

impl HexBytes {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        HexBytes(hex::encode(bytes))
    }

    /// Accepts either case; the stored form is lowercase.
    pub fn parse(text: &str) -> Result<Self, HexError> {
        if !text.len().is_multiple_of(2) || !text.bytes().all(|b| b.is_ascii_hexdigit()) {
            let mut shown: String = text.chars().take(24).collect();
            if shown.len() < text.len() {
                shown.push('…');
            }
            return Err(HexError(shown));
        }
        Ok(HexBytes(text.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        hex::decode(&self.0).expect("HexBytes holds valid hex")
    }

    /// Number of decoded bytes.
    pub fn byte_len(&self) -> usize {
        self.0.len() / 2
    }
}

impl fmt::Display for HexBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for HexBytes {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        HexBytes::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// A runtime datum. RSA keys keep their owner/role provenance so the
/// analyzer can tell `{M}_B` from `[M]_A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Text(String),
    Hex(HexBytes),
    RsaKey(RsaKey),
    Integer(i64),
    Boolean(bool),
}

/// Kind tag used in error messages and kind checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Text,
    Hex,
    RsaKey,
    Integer,
    Boolean,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "text",
            ValueKind::Hex => "hex",
            ValueKind::RsaKey => "rsa key",
            ValueKind::Integer => "integer",
            ValueKind::Boolean => "boolean",
        })
    }
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Text(_) => ValueKind::Text,
            Value::Hex(_) => ValueKind::Hex,
            Value::RsaKey(_) => ValueKind::RsaKey,
            Value::Integer(_) => ValueKind::Integer,
            Value::Boolean(_) => ValueKind::Boolean,
        }
    }

    /// Text rendering for string-like contexts. Keys have no implicit
    /// rendering; callers that accept keys use [`RsaKey::export_text`].
    pub fn render_text(&self) -> Option<String> {
        match self {
            Value::Text(s) => Some(s.clone()),
            Value::Hex(h) => Some(h.as_str().to_owned()),
            Value::Integer(i) => Some(i.to_string()),
            Value::Boolean(b) => Some(b.to_string()),
            Value::RsaKey(_) => None,
        }
    }

    /// Rendering used by `say`; keys show as their export document.
    pub fn display_text(&self) -> String {
        match self {
            Value::RsaKey(k) => k.export_text(),
            other => other.render_text().unwrap_or_default(),
        }
    }

    /// Approximate memory footprint, used for the value-size resource guard.
    pub fn size_hint(&self) -> usize {
        match self {
            Value::Text(s) => s.len(),
            Value::Hex(h) => h.as_str().len(),
            Value::RsaKey(k) => k.modulus_bytes() * 2,
            Value::Integer(_) | Value::Boolean(_) => 8,
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<HexBytes> for Value {
    fn from(h: HexBytes) -> Self {
        Value::Hex(h)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Integer(i)
    }
}

impl From<RsaKey> for Value {
    fn from(k: RsaKey) -> Self {
        Value::RsaKey(k)
    }
}
