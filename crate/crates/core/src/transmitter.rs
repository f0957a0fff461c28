//! Alice: Gaussian symbols, RRC shaping, single-sideband drive with pilot
//! tones, and the ideal optical modulator.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{analytic_signal, fir_filter, frequency_shift, power_spectrum, upsample};
use crate::dsp::{RrcFilter, SampledSignal, Spectrum};
use crate::rng::{gaussian, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymbolFrame {
    pub symbols: Vec<Complex64>,
    /// Per-quadrature variance the symbols were drawn with.
    pub target_variance: f64,
    pub seed: u64,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PilotConfig {
    /// Residual-carrier tone, Hz.
    pub carrier_pilot_freq: f64,
    pub second_pilot_freq: f64,
    /// Power of each pilot relative to the total quantum-band power, dB.
    pub pilot_power_excess_db: f64,
    pub enabled: bool,
}

impl Default for PilotConfig {
    fn default() -> Self {
        PilotConfig {
            carrier_pilot_freq: 0.0,
            second_pilot_freq: 100e6,
            pilot_power_excess_db: 20.0,
            enabled: true,
        }
    }
}

impl PilotConfig {
    pub fn frequencies(&self) -> [f64; 2] {
        [self.carrier_pilot_freq, self.second_pilot_freq]
    }

    /// Checks the pilots against a quantum band `[lo, hi]` and the Nyquist
    /// limit of `sample_rate`.
    pub fn validate(&self, band_lo: f64, band_hi: f64, sample_rate: f64) -> Result<()> {
        if self.carrier_pilot_freq == self.second_pilot_freq {
            return Err(Error::param("pilots", "pilot frequencies must differ"));
        }
        if !self.pilot_power_excess_db.is_finite() {
            return Err(Error::param("pilot_power_excess_db", "must be finite"));
        }
        for freq in self.frequencies() {
            if !(libm::fabs(freq) < sample_rate / 2.0) {
                return Err(Error::param("pilot_freq", format!("{freq} Hz is beyond Nyquist")));
            }
            if (band_lo..=band_hi).contains(&freq) {
                return Err(Error::PilotInBand {
                    freq,
                    band_lo,
                    band_hi,
                });
            }
        }
        Ok(())
    }

    /// Linear power ratio pilot / band.
    pub fn power_ratio(&self) -> f64 {
        libm::pow(10.0, self.pilot_power_excess_db / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LaserModel {
    /// Lorentzian linewidth, Hz.
    pub linewidth: f64,
    /// Optical power, arbitrary reference units.
    pub power: f64,
    pub seed: u64,
}

impl Default for LaserModel {
    fn default() -> Self {
        LaserModel {
            linewidth: 1e3,
            power: 1.0,
            seed: 0,
        }
    }
}

impl LaserModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth >= 0.0 && self.linewidth.is_finite()) {
            return Err(Error::param("linewidth", "must be finite and non-negative"));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::param("power", "must be positive"));
        }
        Ok(())
    }
}

/// `n` complex symbols with i.i.d. zero-mean Gaussian quadratures of
/// variance `variance` each.
pub fn generate_symbols(n: usize, variance: f64, seed: u64) -> Result<SymbolFrame> {
    if n < 2 {
        return Err(Error::param("n", "need at least two symbols"));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::param("variance", "must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let std_dev = libm::sqrt(variance);
    let i = gaussian(&mut rng, n, std_dev);
    let q = gaussian(&mut rng, n, std_dev);
    Ok(SymbolFrame {
        symbols: i.iter().zip(&q).map(|(&a, &b)| Complex64::new(a, b)).collect(),
        target_variance: variance,
        seed,
    })
}

/// Zero-insertion upsampling by the filter's samples-per-symbol followed by
/// RRC filtering. The result is complex baseband at
/// `symbol_rate·samples_per_symbol`.
pub fn shape_pulse(frame: &SymbolFrame, rrc: &RrcFilter, symbol_rate: f64) -> Result<SampledSignal> {
    let up = upsample(&frame.symbols, symbol_rate, rrc.samples_per_symbol())?;
    fir_filter(&up, rrc.taps())
}

/// Single-sideband RF drive: the baseband is moved to `if_freq`, reduced to
/// its real part and rebuilt as an analytic signal, then the pilot tones are
/// added.
///
/// Each pilot carries `pilot_power_excess_db` more power than the quantum
/// band measured on this frame. A silent band gives unit-power pilots.
/// `half_bandwidth` is the one-sided occupied bandwidth of the baseband and
/// sets the band the pilots must stay out of.
pub fn build_ssb_rf(
    baseband: &SampledSignal,
    if_freq: f64,
    half_bandwidth: f64,
    pilots: &PilotConfig,
) -> Result<SampledSignal> {
    let fs = baseband.sample_rate();
    let (band_lo, band_hi) = (if_freq - half_bandwidth, if_freq + half_bandwidth);
    if !(band_lo > 0.0 && band_hi < fs / 2.0) {
        return Err(Error::param("if_freq", "quantum band must sit inside (0, fs/2)"));
    }
    if pilots.enabled {
        pilots.validate(band_lo, band_hi, fs)?;
    }

    let shifted = frequency_shift(baseband, if_freq)?;
    let real = SampledSignal::from_real(&shifted.real_parts(), fs)?;
    let ssb = analytic_signal(&real)?;
    if !pilots.enabled {
        return Ok(ssb);
    }

    let band_power = ssb.mean_power();
    let reference = if band_power > 0.0 { band_power } else { 1.0 };
    let amplitude = libm::sqrt(reference * pilots.power_ratio());
    let mut samples = ssb.into_samples();
    for freq in pilots.frequencies() {
        add_tone(&mut samples, amplitude, freq / fs);
    }
    SampledSignal::new(samples, fs)
}

fn add_tone(samples: &mut [Complex64], amplitude: f64, cycles_per_sample: f64) {
    for (k, s) in samples.iter_mut().enumerate() {
        let turns = cycles_per_sample * k as f64;
        *s += Complex64::from_polar(amplitude, 2.0 * PI * (turns - libm::floor(turns)));
    }
}

/// Ideal linear modulator: `sqrt(P)·rf·exp(jφ)`.
pub fn modulate_optical(rf: &SampledSignal, laser: &LaserModel, phase_path: &[f64]) -> Result<SampledSignal> {
    laser.validate()?;
    if phase_path.len() != rf.len() {
        return Err(Error::LengthMismatch {
            expected: rf.len(),
            found: phase_path.len(),
        });
    }
    let amp = libm::sqrt(laser.power);
    let field = rf
        .samples()
        .iter()
        .zip(phase_path)
        .map(|(&x, &phi)| x * Complex64::from_polar(amp, phi))
        .collect();
    SampledSignal::new(field, rf.sample_rate())
}

/// Spectrum of an RF drive referenced to its pilot tones.
///
/// Bins within one bin of a pilot read tone power over pilot power. All
/// other bins read the continuum density integrated over one symbol-rate
/// bandwidth, again over pilot power, so a raised-cosine band whose total
/// power sits `x` dB below the pilots shows a plateau at `-x` dB whatever
/// the FFT size. Choose `nfft` so the pilots land on bins.
pub fn pilot_referenced_spectrum(
    rf: &SampledSignal,
    pilots: &PilotConfig,
    symbol_rate: f64,
    nfft: usize,
) -> Result<Spectrum> {
    let raw = power_spectrum(rf, nfft)?;
    let pilot_bins: Vec<usize> = pilots.frequencies().iter().map(|&f| raw.bin_of(f)).collect();
    let pilot_power = pilot_bins
        .iter()
        .map(|&b| raw.power[b])
        .fold(0.0, f64::max);
    if !(pilot_power > 0.0) {
        return Err(Error::InvalidInput("no pilot power in the spectrum"));
    }
    let continuum_scale = symbol_rate / raw.enbw;
    let near_pilot = |k: usize| pilot_bins.iter().any(|&b| k.abs_diff(b) <= 1);
    let power = raw
        .power
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            if pilots.enabled && near_pilot(k) {
                p / pilot_power
            } else {
                p * continuum_scale / pilot_power
            }
        })
        .collect();
    Ok(Spectrum { power, ..raw })
}

/// Lower and upper edge of the occupied band around `center`: the outermost
/// bins, walking out from `center`, still within `drop_db` of the level at
/// `center`.
pub fn band_edges(spectrum: &Spectrum, center: f64, drop_db: f64) -> (f64, f64) {
    let db = spectrum.to_db();
    let c = spectrum.bin_of(center);
    let floor = db[c] - drop_db;
    let mut hi = c;
    while hi + 1 < db.len() && db[hi + 1] >= floor {
        hi += 1;
    }
    let mut lo = c;
    while lo > 0 && db[lo - 1] >= floor {
        lo -= 1;
    }
    (spectrum.freqs[lo], spectrum.freqs[hi])
}
