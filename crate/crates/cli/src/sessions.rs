//! Append-only record of graded submissions, optionally backed by a JSONL
//! file.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub task_id: String,
    pub program: Json,
    pub outcome: Json,
    pub feedback: Json,
    pub timestamp: String,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session store I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("session store line {line}: {source}")]
    Corrupt {
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Default)]
pub struct SessionStore {
    inner: Mutex<Inner>,
}

#[derive(Default)]
struct Inner {
    records: Vec<SessionRecord>,
    file: Option<File>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads existing records from `path` and appends new ones to it.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let mut records = Vec::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                records.push(
                    serde_json::from_str(&line)
                        .map_err(|source| StoreError::Corrupt { line: i + 1, source })?,
                );
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(SessionStore {
            inner: Mutex::new(Inner {
                records,
                file: Some(file),
            }),
        })
    }

    pub fn append(&self, record: SessionRecord) -> Result<(), StoreError> {
        let mut inner = self.inner.lock().expect("session store lock");
        if let Some(file) = inner.file.as_mut() {
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        inner.records.push(record);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<SessionRecord> {
        let inner = self.inner.lock().expect("session store lock");
        inner.records.iter().find(|r| r.session_id == id).cloned()
    }

    pub fn list(&self) -> Vec<SessionRecord> {
        self.inner.lock().expect("session store lock").records.clone()
    }
}
