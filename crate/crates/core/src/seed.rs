//! Deterministic per-trial seed derivation.
//!
//! Trial `i` of a batch with master seed `m` runs on
//! `splitmix64(m ^ splitmix64(i))`, where `splitmix64` is the finalizer of
//! Steele, Lea and Flood's SplitMix64 generator applied after adding the
//! golden-ratio increment `0x9E3779B97F4A7C15`. Each trial seeds its own
//! `ChaCha8Rng` with [`rand::SeedableRng::seed_from_u64`], so results never
//! depend on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// The random stream every simulation in this crate runs on.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
