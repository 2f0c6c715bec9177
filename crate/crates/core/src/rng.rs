//! Seeded random streams.
//!
//! Every stochastic component receives its own ChaCha stream derived from a
//! base seed and a stream name, so that draws in one module never shift the
//! draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Well-known stream names used by the pipeline.
pub mod streams {
    pub const TRAIN: &str = "train";
    pub const RESIDUALS: &str = "residuals";
    pub const SIMULATE: &str = "simulate";
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a 64-bit seed for `name` from `base`. Stable across releases.
pub fn stream_seed(base: u64, name: &str) -> u64 {
    // FNV-1a over the name, then mixed with the base seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(base ^ h)
}

pub fn stream(base: u64, name: &str) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(base, name))
}

/// Seed for the `index`-th member of an ensemble. Member 0 uses `base`
/// unchanged so that a one-member ensemble reproduces a single fit.
pub fn member_seed(base: u64, index: usize) -> u64 {
    if index == 0 {
        base
    } else {
        splitmix64(base.wrapping_add(index as u64))
    }
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
