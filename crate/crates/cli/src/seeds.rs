//! Seed fan-out: every module-level random stream is derived from the one
//! root seed in the run configuration, so a partial rerun of any command
//! draws exactly the numbers a full pipeline run would have drawn.
//!
//! Derivation: `SHA-256(root_seed as little-endian u64 ‖ 0x1F ‖ purpose
//! UTF-8)`, truncated to the first eight bytes read as a little-endian
//! `u64`. The 0x1F separator keeps `(root, purpose)` pairs unambiguous.

use sha2::{Digest, Sha256};

/// Purposes in use across the commands, for reference and tests:
/// `"scorer.forest"`, `"calibrate.split"`, `"audit.plan"`,
/// `"stimuli.assembly"`.
pub fn derive_seed(root: u64, purpose: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update([0x1F]);
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
