// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeding conventions.
//!
//! Every stochastic routine draws from [`ChaCha8Rng`] seeded through
//! `seed_from_u64`. Child streams (bootstrap replicates, Monte Carlo runs)
//! take their seed from [`derive_seed`], a SplitMix64 finalizer applied to the
//! parent seed and a stream index, so replicate `b` sees the same stream no
//! matter which thread or in which order it runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed derived from a path of indices, e.g. `(experiment, shift, run)`.
pub fn derive_seed_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |acc, &i| derive_seed(acc, i))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
