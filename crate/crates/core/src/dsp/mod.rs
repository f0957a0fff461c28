//! Sample-domain primitives: filter design, convolution, rate changes,
//! frequency translation, analytic signals and spectral estimation.
//!
//! All operations are pure and work on whole frames.

mod filter;
mod rate;
mod rrc;
mod signal;
mod spectral;

pub use filter::{brickwall_lowpass, fir_filter};
pub use rate::{decimate, upsample};
pub use rrc::{design_rrc, RrcFilter};
pub use signal::SampledSignal;
pub use spectral::{analytic_signal, frequency_shift, power_spectrum, Spectrum};

/// Frequency of FFT bin `k` of an `n`-point transform at `sample_rate`,
/// mapped to `[-fs/2, fs/2)`.
pub(crate) fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let signed = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
    signed * sample_rate / n as f64
}
