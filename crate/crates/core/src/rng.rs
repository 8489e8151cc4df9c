//! Seeded, splittable random streams.
//!
//! Every stochastic operation in the crate takes its stream as a parameter.
//! Child streams are derived from a parent seed and an index with a
//! SplitMix64 finalizer, so trial `i` of an experiment always sees the same
//! stream regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of child `index` from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child(master: u64, index: u64) -> Stream {
    stream(derive_seed(master, index))
}

/// Splits a fresh child stream off an existing stream.
pub fn split(rng: &mut Stream) -> Stream {
    stream(rng.random())
}
