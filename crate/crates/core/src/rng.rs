//! Deterministic seed derivation.
//!
//! Every randomized stage draws from a ChaCha stream keyed by a seed derived
//! from the master seed and a fixed label. Concurrent work units within a
//! stage select an independent ChaCha stream by unit index, so results do not
//! depend on how units are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derives a stage seed from `(master, label)`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for work unit `unit` of a stage seeded with `seed`.
pub fn unit_rng(seed: u64, unit: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(unit);
    r
}
