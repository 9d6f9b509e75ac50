//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from explicit `u64` seeds through
//! these helpers, so any sample, batch or training step can be reproduced
//! in isolation: the generator for item `i` of stream `"x"` at seed `s`
//! never depends on how many other items were drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche behavior for seed whitening.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and an index.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Derives a child seed scoped by a textual stream label and an index.
pub fn derive_stream(seed: u64, stream: &str, index: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in stream.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    derive(seed ^ splitmix64(h), index)
}

/// A ChaCha generator for one derived stream position.
pub fn rng_for(seed: u64, stream: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_stream(seed, stream, index))
}
