//! Seeded pseudo-randomness.
//!
//! Every random draw in the crate comes from a ChaCha8 stream. Independent
//! streams (one per synthesis window, one per training epoch, ...) are derived
//! from a base seed and a stream index with the SplitMix64 finalizer, so the
//! same `(seed, index)` pair always yields the same stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` derived from `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    seeded(mix64(seed ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
}
