//! Seeded generators.
//!
//! Every stochastic routine takes a user seed and derives independent streams
//! from it with [`derive_seed`], so results never depend on call order across
//! components or on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a list of stream tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn rng_for(seed: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tags))
}

/// Stream tags used across the crate. Values are arbitrary but fixed.
pub(crate) mod stream {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const SAMPLE: u64 = 4;
    pub const BATCH: u64 = 5;
    pub const NEGATIVE: u64 = 6;
    pub const WALK: u64 = 7;
    pub const SKIPGRAM: u64 = 8;
    pub const KMEANS: u64 = 9;
    pub const SPECTRAL: u64 = 10;
    pub const LOUVAIN: u64 = 11;
    pub const LPA: u64 = 12;
    pub const TSNE: u64 = 14;
    pub const PROBE: u64 = 15;
    pub const PCA: u64 = 16;
    pub const NODE2VEC: u64 = 17;
    pub const EMBED_INIT: u64 = 18;
}
