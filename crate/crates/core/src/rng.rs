//! Seeded, splittable random streams.
//!
//! Every sampler draws from its own ChaCha stream, keyed by the user seed
//! and selected by a `(domain, index)` pair, so adding a new consumer never
//! shifts the draws of an existing one and parallel trials are independent
//! of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains. Each sampler family owns one.
pub mod domain {
    pub const MODEL_A: u32 = 0x0a;
    pub const MODEL_B: u32 = 0x0b;
    pub const MODEL_C: u32 = 0x0c;
    pub const MODEL_D: u32 = 0x0d;
    pub const MODEL_E: u32 = 0x0e;
    pub const MODEL_F: u32 = 0x0f;
    pub const MODEL_G: u32 = 0x10;
    pub const MODEL_H: u32 = 0x11;
    pub const M4: u32 = 0x12;
    pub const M4_COEFFS: u32 = 0x13;
    pub const GUMBEL: u32 = 0x14;
    pub const RANK_SCORES: u32 = 0x20;
    pub const TRIAL: u32 = 0x30;
    pub const POWER: u32 = 0x31;
}

/// A fresh generator for substream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: u32, index: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 32) | index as u64);
    rng
}

/// Derives a child seed; used when a trial needs its own full seed space
/// (for example to generate a model sample and then rank scores from it).
pub fn child_seed(seed: u64, domain: u32, index: u32) -> u64 {
    use rand::RngCore;
    substream(seed, domain, index).next_u64()
}
