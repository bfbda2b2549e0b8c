//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the simulator and harness so that streams never collide.
pub mod stream {
    pub const INSTANCE: u64 = 1;
    pub const CONTEXTS: u64 = 2;
    pub const ENVIRONMENT: u64 = 3;
    pub const POLICY: u64 = 4;
    pub const KAPPA: u64 = 5;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a seed from a base seed and a list of keys (stream tag, round, ...).
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(base), |acc, &k| mix64(acc ^ mix64(k)))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(base: u64, keys: &[u64]) -> ChaCha8Rng {
    seeded_rng(derive_seed(base, keys))
}
