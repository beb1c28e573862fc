//! The run manifest: what a command wrote and when it ran.
//!
//! The `timestamp_unix` field here is the only timestamp in any output
//! file, which is what lets identical configs + replay stores produce
//! byte-identical outputs everywhere else.

use serde::Serialize;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Subcommand that produced this run.
    pub command: String,
    pub tool_version: String,
    /// Root seed; per-module seeds derive from it (see `seeds`).
    pub seed: u64,
    pub adapter_mode: String,
    /// Store path when recording or replaying.
    pub replay_store: Option<String>,
    /// Output file names (relative to the output directory), sorted.
    pub outputs: Vec<String>,
    /// Seconds since the Unix epoch at write time — the single
    /// intentionally non-reproducible field of a run.
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        seed: u64,
        adapter_mode: String,
        replay_store: Option<String>,
        mut outputs: Vec<String>,
    ) -> RunManifest {
        outputs.sort();
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            adapter_mode,
            replay_store,
            outputs,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}
