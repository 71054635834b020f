//! Reproducible random streams keyed by `(seed, replicate, tag)`.
//!
//! Every sampler takes its own generator; nothing shares mutable RNG state,
//! so replicates can run on any thread in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const GRAPH: u64 = 1;
    pub const LIMIT: u64 = 2;
    pub const DK: u64 = 3;
    pub const ORACLE: u64 = 4;
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for one `(seed, replicate, tag)` triple.
pub fn stream(seed: u64, replicate: u64, tag: u64) -> StreamRng {
    let mut state = splitmix64(seed) ^ splitmix64(replicate.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(tag);
    rng
}

/// Uniform on (0, 1], safe to pass to `ln`.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
