//! Seeded generator shared by every randomized routine.
//!
//! All baselines and benchmarks draw from ChaCha20 keyed by
//! `seed_from_u64(seed)` and addressed by a 64-bit stream id, so a given
//! `(seed, stream)` pair yields the same values on every platform and under
//! any thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in reports next to the seed.
pub const RNG_ALGORITHM: &str = "chacha20(rand_chacha 0.9, seed_from_u64, per-sample stream)";

pub fn stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from `[0, 1)` with 53 bits of precision.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
