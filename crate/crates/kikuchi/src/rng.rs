//! Seeded random streams.
//!
//! Every consumer derives its own ChaCha stream from `(seed, purpose)`, so adding
//! draws in one place never shifts the numbers seen elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

pub mod purpose {
    pub const SPIKE: u64 = 1;
    pub const COUNT: u64 = 2;
    pub const SUBSETS: u64 = 3;
    pub const SIGNS: u64 = 4;
    pub const ASYM_SPIKE: u64 = 5;
    pub const ASYM_TUPLES: u64 = 6;
    pub const ASYM_SIGNS: u64 = 7;
    pub const EIGEN_START: u64 = 10;
    pub const COMBINATION: u64 = 11;
    pub const ROUNDING: u64 = 12;
    pub const CANDIDATE: u64 = 13;
    pub const SPLIT: u64 = 14;
    pub const PHASES: u64 = 15;
    pub const TRIAL: u64 = 16;
}

pub fn stream(seed: u64, purpose: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Seed for the `i`-th member of a family derived from `seed` (trials, grid cells).
pub fn derive(seed: u64, i: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
