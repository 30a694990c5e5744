//! Per-trial random streams.
//!
//! Every stream is ChaCha20 keyed with `SHA-256(master_seed as little-endian
//! u64)`; the 64-bit stream id is `(trial_index << 8) | purpose`. Streams for
//! different trials or purposes never overlap, and a stream depends on
//! nothing but the seed, the trial index and the purpose, so every sweep
//! value of a trial sees the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub const RNG_DESCRIPTION: &str =
    "ChaCha20; key = SHA-256(master_seed, u64 little-endian); stream = (trial_index << 8) | purpose";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    /// UE drop positions.
    Geometry = 1,
    /// Natural-scatter surface states.
    Scatter = 2,
    /// Rayleigh "other subpaths".
    Subpath = 3,
    /// Per-slot activity draws.
    Slot = 4,
}

pub fn stream(master_seed: u64, trial_index: u64, purpose: Purpose) -> ChaCha20Rng {
    assert!(
        trial_index < 1 << 56,
        "trial index {trial_index} exceeds the stream id space"
    );
    let key: [u8; 32] = Sha256::digest(master_seed.to_le_bytes()).into();
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream((trial_index << 8) | purpose as u64);
    rng
}
