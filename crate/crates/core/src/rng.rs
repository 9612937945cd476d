//! Seed derivation. Every random stream in an experiment is a ChaCha8
//! generator keyed by the master seed plus a path of labels, so streams for
//! different purposes never overlap and can be recreated independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

// purpose labels
pub const SPLIT: u64 = 1;
pub const INIT: u64 = 2;
pub const GENERATION: u64 = 3;
pub const TRAIN_NOISE: u64 = 4;
pub const TEST_NOISE: u64 = 5;
pub const TRIAL: u64 = 6;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `path` into `seed` to obtain a derived 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn stream(seed: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(seed, path))
}
