//! Seed derivation.
//!
//! Every random stream in the pipeline is derived from the single top-level
//! seed: `component_seed = mix(top_seed, fnv1a(component_name))`, optionally
//! followed by further `mix` steps for integer indices (fold, repeat, tree).
//! `mix` is the SplitMix64 finalizer, so derived seeds are stable across
//! platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a named component.
pub fn derive(seed: u64, component: &str) -> u64 {
    splitmix(seed ^ splitmix(fnv1a(component.as_bytes())))
}

/// Seed for the `index`-th member of a component (a tree, a fold, a column).
pub fn derive_index(seed: u64, index: u64) -> u64 {
    splitmix(seed.rotate_left(17) ^ splitmix(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
