//! Per-run seeds. A run is keyed by its grid point and index; the key is
//! packed into 64 bits and pushed through a bijection keyed by the master
//! seed, so distinct points never share a seed.

use cvqkd_core::rng::{derive_seed, mix64, stream};

pub fn run_seed(master: u64, rolloff: f64, vmod: f64, run: usize) -> u64 {
    let b = ((rolloff * 1e4).round() as u64) & 0xFFFF;
    let v = ((vmod * 1e3).round() as u64) & 0xFF_FFFF;
    let r = (run as u64) & 0xFF_FFFF;
    mix64(mix64(master) ^ (b << 48 | v << 24 | r))
}

/// Seed of the noise records behind every roll-off's calibration. Shared
/// across roll-offs so their SNUs differ only through the filter.
pub fn calibration_seed(master: u64) -> u64 {
    derive_seed(master, stream::CALIBRATION)
}
