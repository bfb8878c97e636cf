use std::collections::BTreeMap;

use serde::Deserialize;

use crate::analyzer::FindingCode;
use crate::blocks::Opcode;
use crate::crypto::RsaKey;
use crate::format::{program_from_json, FormatError};
use crate::value::{HexBytes, Value};

use super::{FlawedVariant, TaskDefinition, Verifier};

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("task fixture is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("task {task}: starter: {source}")]
    Starter { task: String, source: FormatError },
    #[error("task {task}: no key {reference:?}")]
    UnknownKey { task: String, reference: String },
    #[error("task {task}: unknown opcode {opcode:?}")]
    UnknownOpcode { task: String, opcode: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    id: String,
    title: String,
    help: String,
    verifier: VerifierFile,
    rules: Vec<FindingCode>,
    keys: Vec<RsaKey>,
    env: BTreeMap<String, EnvValue>,
    starter: serde_json::Value,
    reference: String,
    flawed_variants: Vec<FlawedVariant>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum EnvValue {
    Text(String),
    Hex(HexBytes),
    Int(i64),
    /// `owner:ROLE`, looked up in the fixture's key list.
    Keyref(String),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum VerifierFile {
    Exact { opcode: String, args: Vec<String> },
    CaesarCryptanalysis { shift: i64, plaintext: String },
    Signature { message: String, signer_public: String },
    Pgp { message: String, recipient_private: String },
}

pub(super) fn parse_task(text: &str) -> Result<TaskDefinition, FixtureError> {
    let file: TaskFile = serde_json::from_str(text)?;
    let id = file.id;
    let key = |reference: &str| -> Result<RsaKey, FixtureError> {
        file.keys
            .iter()
            .find(|k| format!("{}:{}", k.owner, k.role) == reference)
            .cloned()
            .ok_or_else(|| FixtureError::UnknownKey {
                task: id.clone(),
                reference: reference.to_owned(),
            })
    };

    let mut env = BTreeMap::new();
    for (name, v) in file.env {
        let value = match v {
            EnvValue::Text(t) => Value::Text(t),
            EnvValue::Hex(h) => Value::Hex(h),
            EnvValue::Int(i) => Value::Integer(i),
            EnvValue::Keyref(r) => Value::RsaKey(key(&r)?),
        };
        env.insert(name, value);
    }

    let verifier = match file.verifier {
        VerifierFile::Exact { opcode, args } => Verifier::Exact {
            opcode: opcode.parse::<Opcode>().map_err(|_| FixtureError::UnknownOpcode {
                task: id.clone(),
                opcode,
            })?,
            args,
        },
        VerifierFile::CaesarCryptanalysis { shift, plaintext } => {
            Verifier::CaesarCryptanalysis { shift, plaintext }
        }
        VerifierFile::Signature {
            message,
            signer_public,
        } => Verifier::Signature {
            message,
            signer_public: key(&signer_public)?,
        },
        VerifierFile::Pgp {
            message,
            recipient_private,
        } => Verifier::Pgp {
            message,
            recipient_private: key(&recipient_private)?,
        },
    };

    let starter = program_from_json(&file.starter).map_err(|source| FixtureError::Starter {
        task: id.clone(),
        source,
    })?;

    Ok(TaskDefinition {
        id,
        title: file.title,
        help: file.help,
        env,
        verifier,
        rules: file.rules,
        starter,
        reference: file.reference,
        flawed_variants: file.flawed_variants,
    })
}
