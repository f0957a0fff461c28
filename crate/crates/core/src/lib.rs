//! Signal chain for a Gaussian-modulated continuous-variable QKD link in
//! back-to-back configuration.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece
//! of the link: sample-domain DSP primitives, the transmitter (Gaussian
//! symbols, root-raised-cosine shaping, single-sideband drive with pilot
//! tones), laser phase noise and attenuation, the balanced heterodyne
//! detector, the pilot-aided receiver and the shot-noise-unit calibration
//! that turns receiver variances into excess noise.
//!
//! IO, configuration files and sweep orchestration live in the `cvqkd-sim`
//! companion crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod dsp;
mod error;
pub mod fft;
pub mod frontend;
pub mod link;
pub mod metrics;
pub mod receiver;
pub mod rng;
pub mod stats;
pub mod transmitter;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
