//! Seeded random number streams.
//!
//! One user-facing seed fans out into independent ChaCha streams, one per
//! sampling site, so every operation is deterministic for a fixed seed and
//! repetition loops can run in any order (or in parallel) without changing
//! results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const STREAM_GAUSSIAN_MATRIX: u64 = 0;
pub const STREAM_GRID_MODEL: u64 = 1;
pub const STREAM_PREPROCESS: u64 = 2;
pub const STREAM_SIMULATE_NOISE: u64 = 3;
pub const STREAM_ESD_BASE: u64 = 16;
pub const STREAM_CHAOS_BASE: u64 = 1 << 32;

/// A deterministic generator for (`seed`, `stream`).
pub fn stream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
