//! Deterministic RNG substream derivation.
//!
//! Every stochastic stage draws from its own substream keyed by
//! (master seed, domain tag, indices...). Results are therefore identical
//! whether a stage runs sequentially or region-parallel, and independent
//! of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keeping substreams of different stages disjoint.
pub mod domain {
    pub const ATTRIBUTES: u64 = 0x01;
    pub const DESIRABILITY: u64 = 0x02;
    pub const REDISTRIBUTE: u64 = 0x03;
    pub const MAIL_IN: u64 = 0x04;
    pub const NETWORK_INIT: u64 = 0x05;
    pub const SCORE: u64 = 0x06;
    pub const POLL_DRAW: u64 = 0x07;
    pub const POLL_NOISE: u64 = 0x08;
    pub const FRAUD_REGIONS: u64 = 0x09;
    pub const FRAUD_APPLY: u64 = 0x0a;
    pub const KMEANS: u64 = 0x0b;
    pub const EXPERIMENT: u64 = 0x0c;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed with a sequence of parts into a single 64-bit key.
pub fn mix(master: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(master);
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

/// Derive an independent substream for `(master, parts)`.
pub fn substream(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(master, parts))
}
