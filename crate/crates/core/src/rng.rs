//! Deterministic, per-stream random number generators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purpose tags; each (seed, trial, purpose) triple gets its own stream.
pub const STREAM_DATA: u64 = 0;

/// Independent stream derived from a base seed, a trial index and a purpose tag.
pub fn stream(seed: u64, trial: u64, purpose: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 16) | (purpose & 0xffff));
    rng
}

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
