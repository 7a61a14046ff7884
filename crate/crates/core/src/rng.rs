//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha20 seeded with a `u64`.
//! Independent substreams (ensemble members, sweep cells) use the ChaCha
//! stream selector so that each is a pure function of `(seed, stream)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Name recorded in run metadata.
pub const ALGORITHM: &str = "ChaCha20";

pub fn seeded(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed, e.g. one per sweep cell.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index.wrapping_add(1)).next_u64()
}
