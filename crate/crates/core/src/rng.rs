//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value. Independent streams are derived from one master seed with
//! [`derive_seed`]: the master, a stream tag and an index are folded through
//! the SplitMix64 finalizer, so `(master, tag, index)` always maps to the
//! same child seed and distinct triples give unrelated children.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the ensemble runner and experiments.
pub mod stream {
    pub const NETWORK: u64 = 1;
    pub const CASCADE: u64 = 2;
    pub const THEORY_GRAPH: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const LAYER: u64 = 5;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `tag`, replica/index `index`, under `master`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ tag.wrapping_mul(GOLDEN));
    splitmix64(b ^ index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
