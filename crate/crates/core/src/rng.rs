//! Seed derivation. Every sample is drawn from its own ChaCha8 stream, so no
//! generator is ever shared between threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Stable 64-bit identifier of a process description string.
pub fn process_id(description: &str) -> u64 {
    let digest = Sha256::digest(description.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Generator for a directly seeded sample.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replication `replication` of process `process` under `master`.
///
/// The key is `sha256(master ‖ process)`; the replication index selects the
/// ChaCha stream, so replications are independent of scheduling.
pub fn replication(master: u64, process: u64, replication: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(process.to_le_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}
