//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from [`Xoshiro256PlusPlus`]
//! seeded through `seed_from_u64` (which expands the seed with SplitMix64).
//! Independent streams derived from one seed use the generator's
//! `long_jump`, which advances by 2^192 steps.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus as StreamRng;

/// Primary stream for `seed`.
pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// The `k`-th independent stream for `seed` (`k = 0` is [`stream`]).
pub fn substream(seed: u64, k: u32) -> StreamRng {
    let mut rng = stream(seed);
    for _ in 0..k {
        rng.long_jump();
    }
    rng
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a list of words into one seed. Order matters.
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    let mut h = mix64(base ^ 0x9e37_79b9_7f4a_7c15);
    for &w in words {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix64(w));
    }
    h
}
