//! Seeded randomness. Every stochastic element of the link draws from its own
//! ChaCha stream derived from a run seed, so runs are reproducible and
//! sub-streams never overlap.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

/// Sub-stream labels used when splitting a run seed.
pub mod stream {
    pub const SYMBOLS: u64 = 1;
    pub const TX_LASER: u64 = 2;
    pub const LO_LASER: u64 = 3;
    pub const LO_OFFSET: u64 = 4;
    pub const DETECTOR: u64 = 5;
    pub const VACUUM: u64 = 6;
    pub const ELECTRONIC: u64 = 7;
    pub const CALIBRATION: u64 = 8;
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// `n` i.i.d. zero-mean Gaussian draws with standard deviation `std_dev`.
pub fn gaussian(rng: &mut SimRng, n: usize, std_dev: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std_dev
        })
        .collect()
}

pub fn uniform(rng: &mut SimRng) -> f64 {
    use rand::Rng;
    rng.random::<f64>()
}
