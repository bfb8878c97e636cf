//! Registry of crypto reporter blocks: names, arities, display text.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    CaesarEncrypt,
    CaesarDecrypt,
    AesEncrypt,
    AesDecrypt,
    RsaGenerateKeypair,
    RsaEncrypt,
    RsaDecrypt,
    Sha256,
    Crc32,
    RandomKey,
}

/// What an argument slot accepts before the block runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// Text, hex, integer or boolean, used by its text rendering.
    Text,
    Integer,
    /// Text-like, or an RSA key coerced to its export text.
    Passphrase,
    /// Hex bytes, or text that parses as hex.
    HexInput,
    /// Text or hex; the kind is preserved through RSA.
    Message,
    RsaKey,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
}

impl Opcode {
    pub const ALL: [Opcode; 10] = [
        Opcode::CaesarEncrypt,
        Opcode::CaesarDecrypt,
        Opcode::AesEncrypt,
        Opcode::AesDecrypt,
        Opcode::RsaGenerateKeypair,
        Opcode::RsaEncrypt,
        Opcode::RsaDecrypt,
        Opcode::Sha256,
        Opcode::Crc32,
        Opcode::RandomKey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::CaesarEncrypt => "caesar_encrypt",
            Opcode::CaesarDecrypt => "caesar_decrypt",
            Opcode::AesEncrypt => "aes_encrypt",
            Opcode::AesDecrypt => "aes_decrypt",
            Opcode::RsaGenerateKeypair => "rsa_generate_keypair",
            Opcode::RsaEncrypt => "rsa_encrypt",
            Opcode::RsaDecrypt => "rsa_decrypt",
            Opcode::Sha256 => "sha256",
            Opcode::Crc32 => "crc32",
            Opcode::RandomKey => "random_key",
        }
    }

    pub fn params(self) -> &'static [ParamSpec] {
        use ParamKind::*;
        match self {
            Opcode::CaesarEncrypt => &[
                ParamSpec {
                    name: "PLAINTEXT",
                    kind: Text,
                },
                ParamSpec {
                    name: "SHIFT",
                    kind: Integer,
                },
            ],
            Opcode::CaesarDecrypt => &[
                ParamSpec {
                    name: "CIPHERTEXT",
                    kind: Text,
                },
                ParamSpec {
                    name: "SHIFT",
                    kind: Integer,
                },
            ],
            Opcode::AesEncrypt => &[
                ParamSpec {
                    name: "PLAINTEXT",
                    kind: Text,
                },
                ParamSpec {
                    name: "KEY",
                    kind: Passphrase,
                },
            ],
            Opcode::AesDecrypt => &[
                ParamSpec {
                    name: "CIPHERTEXT",
                    kind: HexInput,
                },
                ParamSpec {
                    name: "KEY",
                    kind: Passphrase,
                },
            ],
            Opcode::RsaGenerateKeypair => &[ParamSpec {
                name: "OWNER",
                kind: Text,
            }],
            Opcode::RsaEncrypt => &[
                ParamSpec {
                    name: "MESSAGE",
                    kind: Message,
                },
                ParamSpec {
                    name: "KEY",
                    kind: RsaKey,
                },
            ],
            Opcode::RsaDecrypt => &[
                ParamSpec {
                    name: "CIPHERTEXT",
                    kind: HexInput,
                },
                ParamSpec {
                    name: "KEY",
                    kind: RsaKey,
                },
            ],
            Opcode::Sha256 | Opcode::Crc32 => &[ParamSpec {
                name: "TEXT",
                kind: Text,
            }],
            Opcode::RandomKey => &[],
        }
    }

    pub fn arity(self) -> usize {
        self.params().len()
    }

    pub fn display_text(self) -> &'static str {
        match self {
            Opcode::CaesarEncrypt => "Encrypt [PLAINTEXT] with shift [SHIFT] using Caesar",
            Opcode::CaesarDecrypt => "Decrypt [CIPHERTEXT] with shift [SHIFT] using Caesar",
            Opcode::AesEncrypt => "Encrypt [PLAINTEXT] with key [KEY] using AES",
            Opcode::AesDecrypt => "Decrypt [CIPHERTEXT] with key [KEY] using AES",
            Opcode::RsaGenerateKeypair => "Generate RSA key pair for [OWNER]",
            Opcode::RsaEncrypt => "Encrypt [MESSAGE] with key [KEY] using RSA",
            Opcode::RsaDecrypt => "Decrypt [CIPHERTEXT] with key [KEY] using RSA",
            Opcode::Sha256 => "Hash [TEXT] using SHA-256",
            Opcode::Crc32 => "Checksum [TEXT] using CRC32",
            Opcode::RandomKey => "Random key",
        }
    }

    /// Keypair generation yields two values and so only appears in the
    /// `set_keypair` statement, never as an expression.
    pub fn is_statement_only(self) -> bool {
        self == Opcode::RsaGenerateKeypair
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown opcode {0:?}")]
pub struct UnknownOpcode(pub String);

impl FromStr for Opcode {
    type Err = UnknownOpcode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Opcode::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| UnknownOpcode(s.to_owned()))
    }
}

impl Serialize for Opcode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// One palette entry as served to block editors.
#[derive(Debug, Clone, Serialize)]
pub struct BlockSpec {
    pub kind: &'static str,
    pub opcode: Option<Opcode>,
    pub text: &'static str,
    pub category: &'static str,
    pub params: Vec<ParamSpec>,
}

/// Every block an editor can place, in palette order.
pub fn palette() -> Vec<BlockSpec> {
    let mut out: Vec<BlockSpec> = Opcode::ALL
        .into_iter()
        .map(|op| BlockSpec {
            kind: if op.is_statement_only() {
                "set_keypair"
            } else {
                "crypto"
            },
            opcode: Some(op),
            text: if op.is_statement_only() {
                "Generate RSA key pair for [OWNER] into [PUBLIC] and [PRIVATE]"
            } else {
                op.display_text()
            },
            category: "crypto",
            params: op.params().to_vec(),
        })
        .collect();
    let plain = |kind, text, category| BlockSpec {
        kind,
        opcode: None,
        text,
        category,
        params: Vec::new(),
    };
    out.extend([
        plain("set", "set [NAME] to [VALUE]", "data"),
        plain("change", "change [NAME] by [BY]", "data"),
        plain("var", "[NAME]", "data"),
        plain("literal", "[VALUE]", "data"),
        plain("join", "join [LEFT] [RIGHT]", "data"),
        plain("equals", "[LEFT] = [RIGHT]", "data"),
        plain("contains", "[HAYSTACK] contains [NEEDLE]?", "data"),
        plain("repeat", "repeat [COUNT]", "control"),
        plain("if_else", "if [CONDITION] then … else …", "control"),
        plain("say", "say [VALUE]", "control"),
    ]);
    out
}
