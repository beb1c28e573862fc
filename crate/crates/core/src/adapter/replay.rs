//! Request-hash-keyed store of recorded exchanges.
//!
//! The store is JSONL — one `{hash, request, reply_text}` object per line —
//! so fixtures diff cleanly and can be regenerated incrementally. Lookups
//! are by the canonical request hash; replaying a request that was never
//! recorded is a hard error, never a silent live call.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AdapterError, ChatRequest};

/// One recorded exchange.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry {
    /// Canonical hash of `request` (see [`ChatRequest::request_hash`]).
    pub hash: String,
    pub request: ChatRequest,
    pub reply_text: String,
}

/// An in-memory index over a JSONL store file.
#[derive(Debug)]
pub struct ReplayStore {
    path: PathBuf,
    entries: HashMap<String, ReplayEntry>,
}

impl ReplayStore {
    /// Load an existing store. Every line must parse and carry a hash that
    /// matches its own request — a corrupted fixture should fail loudly at
    /// load time, not at lookup time.
    pub fn load(path: &Path) -> Result<ReplayStore, AdapterError> {
        let file = File::open(path).map_err(|e| AdapterError::Store {
            path: path.into(),
            detail: e.to_string(),
        })?;
        let mut entries = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| AdapterError::Store {
                path: path.into(),
                detail: format!("line {}: {e}", idx + 1),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry =
                serde_json::from_str(&line).map_err(|e| AdapterError::Store {
                    path: path.into(),
                    detail: format!("line {}: {e}", idx + 1),
                })?;
            let expected = entry.request.request_hash();
            if entry.hash != expected {
                return Err(AdapterError::Store {
                    path: path.into(),
                    detail: format!(
                        "line {}: stored hash {} does not match request hash {}",
                        idx + 1,
                        entry.hash,
                        expected
                    ),
                });
            }
            entries.insert(entry.hash.clone(), entry);
        }
        Ok(ReplayStore {
            path: path.into(),
            entries,
        })
    }

    /// Open a store for recording, creating the file if needed and loading
    /// anything already recorded (so recording is incremental).
    pub fn open_for_record(path: &Path) -> Result<ReplayStore, AdapterError> {
        if path.exists() {
            Self::load(path)
        } else {
            File::create(path).map_err(|e| AdapterError::Store {
                path: path.into(),
                detail: e.to_string(),
            })?;
            Ok(ReplayStore {
                path: path.into(),
                entries: HashMap::new(),
            })
        }
    }

    pub fn lookup(&self, hash: &str) -> Option<&ReplayEntry> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Record one exchange: append the JSONL line and index it. Re-recording
    /// an identical request overwrites the index entry but keeps the first
    /// line authoritative on reload only if replies match; to keep stores
    /// canonical we skip appending when the hash is already present with the
    /// same reply.
    pub fn append(&mut self, request: &ChatRequest, reply_text: &str) -> Result<(), AdapterError> {
        let hash = request.request_hash();
        if let Some(existing) = self.entries.get(&hash) {
            if existing.reply_text == reply_text {
                return Ok(()); // identical re-record, nothing to do
            }
        }
        let entry = ReplayEntry {
            hash: hash.clone(),
            request: request.clone(),
            reply_text: reply_text.to_string(),
        };
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| AdapterError::Store {
                path: self.path.clone(),
                detail: e.to_string(),
            })?;
        let line = serde_json::to_string(&entry).map_err(|e| AdapterError::Store {
            path: self.path.clone(),
            detail: e.to_string(),
        })?;
        writeln!(file, "{line}").map_err(|e| AdapterError::Store {
            path: self.path.clone(),
            detail: e.to_string(),
        })?;
        self.entries.insert(hash, entry);
        Ok(())
    }
}
