//! Fan-out of one global seed into independent per-component seeds.
//!
//! `derive(seed, stream)` is one SplitMix64 step applied to
//! `seed + (stream + 1)·γ`, where γ = 0x9E3779B97F4A7C15. Streams are small
//! integers naming a component; nested components derive again from their
//! parent's seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(GAMMA)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream numbers used by the benchmark pipeline.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const GRADIENT_BOOSTING: u64 = 2;
    pub const ADABOOST: u64 = 3;
    pub const NEURAL_NETWORK: u64 = 4;
    pub const STACKING: u64 = 5;
    pub const STACK_FOREST: u64 = 6;
    pub const STACK_MLP: u64 = 7;
    pub const STACK_KNN: u64 = 8;
}
