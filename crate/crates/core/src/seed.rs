//! Seed stream splitting.
//!
//! Every random draw in the crate flows from one top-level `u64` seed. A
//! component that needs its own stream calls [`derive_seed`] with the parent
//! seed and a short ASCII label (for example `"split"`, `"noise"`,
//! `"channel"`). The label is hashed with 64-bit FNV-1a, xored into the parent
//! seed and passed through the SplitMix64 finalizer. Numeric sub-streams
//! (trial indices, grid points) use [`derive_indexed`], which feeds the index
//! through the same finalizer after the labelled split.
//!
//! Each derived seed then initialises a `ChaCha8Rng`, so the whole pipeline is
//! a pure function of `(input, seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Derive the seed of the named sub-stream of `seed`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    splitmix64(seed ^ fnv1a(label))
}

/// Derive the `index`-th seed of the named sub-stream of `seed`.
pub fn derive_indexed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, label) ^ splitmix64(index))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
