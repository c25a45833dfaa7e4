//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream. Independent
//! components never share a stream: their seeds are derived from a master seed
//! with [`derive_seed`], which hashes the component name with FNV-1a and mixes
//! it with the master seed and an index through the SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier of the generator recorded in every output metadata block.
pub const RNG_ALGORITHM: &str = "chacha8-seed_from_u64";

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Substream seed for `(master, component, index)`.
pub fn derive_seed(master: u64, component: &str, index: u64) -> u64 {
    let a = splitmix64(master ^ fnv1a(component));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Child seed for a tree node: `branch` is 0 for left, 1 for right.
pub(crate) fn child_seed(parent: u64, branch: u64) -> u64 {
    splitmix64(parent ^ (branch + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}
