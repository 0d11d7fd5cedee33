//! Seeded randomness.
//!
//! Every random stream in the crate is a `Xoshiro256PlusPlus` generator whose
//! 256-bit state is expanded from a 64-bit seed with SplitMix64
//! (`SeedableRng::seed_from_u64`). Both generators are public-domain
//! constructions by Blackman and Vigna, so splits and samples can be
//! reproduced bit-for-bit from another language.
//!
//! Pipeline stages never share a stream. A stage seed is the first output of a
//! generator seeded with `root ^ stage_tag`, where the tag is a fixed constant
//! per stage (see [`Stage`]).

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Pipeline stages that draw randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Split,
    ValidNegatives,
    TestNegatives,
    Cluster,
    Init,
    TrainNegatives,
    Eval,
    Bench,
    TargetMask,
}

impl Stage {
    pub const fn tag(self) -> u64 {
        match self {
            Stage::Split => 0x5350_4c49_5400_0001,
            Stage::ValidNegatives => 0x5641_4c4e_4547_0002,
            Stage::TestNegatives => 0x5445_5354_4e45_0003,
            Stage::Cluster => 0x434c_5553_5445_0004,
            Stage::Init => 0x494e_4954_0000_0005,
            Stage::TrainNegatives => 0x5452_4e45_4700_0006,
            Stage::Eval => 0x4556_414c_0000_0007,
            Stage::Bench => 0x4245_4e43_4800_0008,
            Stage::TargetMask => 0x4d41_534b_0000_0009,
        }
    }
}

/// Derives the seed of one pipeline stage from the root seed.
pub fn stage_seed(root: u64, stage: Stage) -> u64 {
    rng(root ^ stage.tag()).next_u64()
}

/// Uniform integer in `0..n` by 128-bit multiply-shift of one `next_u64`
/// output (no rejection step; bias is below 2^-40 for graph-sized `n`).
#[inline]
pub fn below(rng: &mut Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// In-place Fisher–Yates shuffle: for `i` from `len-1` down to `1`, swap
/// element `i` with element `below(i + 1)`.
pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}

/// Uniform real in `[0, 1)` from the top 53 bits of one output.
#[inline]
pub fn unit_f64(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
