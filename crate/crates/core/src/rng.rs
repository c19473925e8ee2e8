//! Seeded, portable random streams.
//!
//! Every random stage owns a `ChaCha8Rng` whose seed is derived from a base
//! seed and a list of integer tags (stage id, radius index, repetition, ...)
//! through a SplitMix64 chain. Two stages with different tags never share a
//! stream, and the derivation does not depend on platform or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags used with [`derive_seed`].
pub mod stage {
    pub const GENERATOR_SEARCH: u64 = 1;
    pub const RANDOM_SUBSAMPLE: u64 = 2;
    pub const CONTINUOUS_POINTS: u64 = 3;
    pub const LANCZOS_START: u64 = 4;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}
