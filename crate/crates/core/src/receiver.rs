//! Bob's digital chain: pilot extraction, frequency-offset and phase
//! estimation, downconversion of the quantum band, matched filtering, phase
//! compensation and symbol decimation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{decimate, design_rrc};
use crate::dsp::{RrcFilter, SampledSignal};
use crate::fft::Fft;
use crate::stats::linear_fit;
use crate::{Error, Result};

/// Shortest pilot trace the offset estimator accepts.
pub const MIN_TRACE_LEN: usize = 1 << 14;

/// Pilot-to-noise floor below which the offset estimate is refused, dB.
pub const MIN_PILOT_SNR_DB: f64 = 10.0;

/// A timing peak closer than this to the runner-up is ambiguous, dB.
pub const TIMING_MARGIN_DB: f64 = 3.0;

/// Bins on each side of the spectral peak counted as pilot power.
const PILOT_HALF_WIDTH_BINS: usize = 16;

/// Everything that shapes the quantum-band output of the receiver. A
/// calibration is only valid for the chain it was measured on.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChainConfig {
    pub roll_off: f64,
    /// RRC length in symbols.
    pub span: usize,
    pub samples_per_symbol: usize,
    pub symbol_rate: f64,
    pub if_freq: f64,
    /// One-sided brickwall bandwidth around each pilot, Hz.
    pub pilot_cutoff: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            roll_off: 0.2,
            span: 20,
            samples_per_symbol: 20,
            symbol_rate: 50e6,
            if_freq: 250e6,
            pilot_cutoff: 50e6,
        }
    }
}

impl ChainConfig {
    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    pub fn rrc(&self) -> Result<RrcFilter> {
        design_rrc(self.roll_off, self.span, self.samples_per_symbol)
    }

    /// Symbols dropped at each frame edge.
    pub fn edge_symbols(&self) -> usize {
        self.span / 2
    }
}

/// Common phase error of the received field on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    /// Unwrapped φ(k), rad.
    pub phases: Vec<f64>,
    pub freq_offset_hat: f64,
}

impl PhaseEstimate {
    /// Mean of two estimates of the same phase, after removing any whole
    /// number of turns between them.
    pub fn average(&self, other: &PhaseEstimate) -> Result<PhaseEstimate> {
        if self.phases.len() != other.phases.len() {
            return Err(Error::LengthMismatch {
                expected: self.phases.len(),
                found: other.phases.len(),
            });
        }
        let n = self.phases.len() as f64;
        let diff: f64 = self.phases.iter().zip(&other.phases).map(|(a, b)| b - a).sum::<f64>() / n;
        let turns = 2.0 * PI * libm::round(diff / (2.0 * PI));
        // Each φ is relative to its own offset ramp; averaging the ramps and
        // the residuals separately gives the same total phase.
        let freq = 0.5 * (self.freq_offset_hat + other.freq_offset_hat);
        let phases = self
            .phases
            .iter()
            .zip(&other.phases)
            .map(|(a, b)| 0.5 * (a + b - turns))
            .collect();
        Ok(PhaseEstimate {
            phases,
            freq_offset_hat: freq,
        })
    }
}

/// Recovered symbols in raw detector units.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredFrame {
    /// Symbols with the edges removed.
    pub symbols: Vec<Complex64>,
    /// Sample offset within the symbol at which the frame was decimated.
    pub timing_phase: usize,
    pub chain: ChainConfig,
}

/// Analytic-signal spectrum of one real record. Pilot and quantum branches
/// both work from it, so the record is transformed once.
#[derive(Debug, Clone)]
pub struct ReceivedSpectrum {
    bins: Vec<Complex64>,
    sample_rate: f64,
}

impl ReceivedSpectrum {
    /// Positive bins doubled, negative bins zeroed, DC and Nyquist kept.
    pub fn new(rx: &SampledSignal) -> Result<Self> {
        if !rx.is_real() {
            return Err(Error::InvalidInput("receiver input must be a real photocurrent"));
        }
        let n = rx.len();
        let mut bins = rx.samples().to_vec();
        Fft::new(n).forward(&mut bins);
        let half = n / 2;
        for (k, bin) in bins.iter_mut().enumerate().skip(1) {
            if k < n.div_ceil(2) {
                *bin *= 2.0;
            } else if !(n.is_multiple_of(2) && k == half) {
                *bin = Complex64::new(0.0, 0.0);
            }
        }
        Ok(ReceivedSpectrum {
            bins,
            sample_rate: rx.sample_rate(),
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    fn to_time(&self, mut bins: Vec<Complex64>, shift: f64) -> Result<SampledSignal> {
        Fft::new(bins.len()).inverse_normalized(&mut bins);
        SampledSignal::new(derotate(&bins, shift, self.sample_rate), self.sample_rate)
    }

    /// Content within `±cutoff` of `center`, moved to DC. The same as a
    /// frequency shift followed by a brickwall low-pass when `center` falls
    /// on a bin.
    pub fn pilot(&self, center: f64, cutoff: f64) -> Result<SampledSignal> {
        let fs = self.sample_rate;
        if !(libm::fabs(center) < fs / 2.0) {
            return Err(Error::param("pilot_freq", "must be below the Nyquist frequency"));
        }
        if !(cutoff > 0.0 && cutoff < fs / 2.0) {
            return Err(Error::param("cutoff", "must lie in (0, sample_rate/2)"));
        }
        let n = self.len();
        let bins = self
            .bins
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if libm::fabs(crate::dsp::bin_frequency(k, n, fs) - center) <= cutoff {
                    x
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        self.to_time(bins, center)
    }

    /// The band at `shift` moved to DC and filtered by the centred FIR
    /// `taps`, by circular convolution. Outputs within half the filter
    /// length of either end carry wrap-around.
    pub fn filtered_band(&self, shift: f64, taps: &[f64]) -> Result<SampledSignal> {
        let n = self.len();
        let fs = self.sample_rate;
        if taps.is_empty() || taps.len() > n {
            return Err(Error::param("taps", "must be non-empty and no longer than the record"));
        }
        if !(libm::fabs(shift) < fs / 2.0) {
            return Err(Error::param("shift", "must be below the Nyquist frequency"));
        }
        // Shifting by −s then filtering with h equals filtering with
        // h[m]·exp(+j2πsm/fs) then shifting.
        let delay = (taps.len() - 1) / 2;
        let mut kernel = vec![Complex64::new(0.0, 0.0); n];
        for (i, &h) in taps.iter().enumerate() {
            let m = i as isize - delay as isize;
            let turns = shift / fs * m as f64;
            kernel[m.rem_euclid(n as isize) as usize] += Complex64::from_polar(h, 2.0 * PI * (turns - libm::floor(turns)));
        }
        Fft::new(n).forward(&mut kernel);
        let bins = self.bins.iter().zip(&kernel).map(|(x, g)| x * g).collect();
        self.to_time(bins, shift)
    }
}

/// Complex pilot trace: the analytic signal of `rx` with the pilot moved to
/// DC, keeping `±cutoff` around it.
pub fn extract_pilot(rx: &SampledSignal, pilot_freq: f64, cutoff: f64) -> Result<SampledSignal> {
    ReceivedSpectrum::new(rx)?.pilot(pilot_freq, cutoff)
}

/// Rotates `samples` by `exp(−j2π·freq·k/fs)`.
fn derotate(samples: &[Complex64], freq: f64, fs: f64) -> Vec<Complex64> {
    let cycles = freq / fs;
    samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let turns = cycles * k as f64;
            x * Complex64::from_polar(1.0, -2.0 * PI * (turns - libm::floor(turns)))
        })
        .collect()
}

/// Unwrapped argument of each sample.
pub fn unwrapped_angle(samples: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut offset = 0.0;
    let mut prev = 0.0;
    for (k, s) in samples.iter().enumerate() {
        let a = s.arg();
        if k > 0 {
            let d = a - prev;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        prev = a;
        out.push(a + offset);
    }
    out
}

/// Frequency of the pilot trace: the FFT peak, refined by a straight-line
/// fit to the unwrapped angle after removing the coarse estimate.
pub fn estimate_freq_offset(trace: &SampledSignal) -> Result<f64> {
    let n = trace.len();
    if n < MIN_TRACE_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_TRACE_LEN,
            found: n,
        });
    }
    let fs = trace.sample_rate();
    let mut spec = trace.samples().to_vec();
    Fft::new(n).forward(&mut spec);
    let power: Vec<f64> = spec.iter().map(|x| x.norm_sqr()).collect();
    let (peak, _) = power
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (k, &p)| if p > best.1 { (k, p) } else { best });

    let total: f64 = power.iter().sum();
    let pilot: f64 = (0..=2 * PILOT_HALF_WIDTH_BINS)
        .map(|d| power[(peak + n + d - PILOT_HALF_WIDTH_BINS) % n])
        .sum();
    let noise = total - pilot;
    if noise > 0.0 {
        let snr_db = 10.0 * libm::log10(pilot / noise);
        if snr_db < MIN_PILOT_SNR_DB {
            return Err(Error::LowSnr { snr_db });
        }
    }

    let coarse = crate::dsp::bin_frequency(peak, n, fs);
    let residual = derotate(trace.samples(), coarse, fs);
    let angle = unwrapped_angle(&residual);
    let k: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let fit = linear_fit(&k, &angle);
    Ok(coarse + fit.slope * fs / (2.0 * PI))
}

/// φ(k): unwrapped angle of the pilot trace once the linear phase of the
/// estimated offset is removed.
pub fn estimate_phase(trace: &SampledSignal, freq_offset_hat: f64) -> Result<PhaseEstimate> {
    if !freq_offset_hat.is_finite() {
        return Err(Error::param("freq_offset_hat", "must be finite"));
    }
    let residual = derotate(trace.samples(), freq_offset_hat, trace.sample_rate());
    Ok(PhaseEstimate {
        phases: unwrapped_angle(&residual),
        freq_offset_hat,
    })
}

/// Multiplies each sample by `exp(−jφ(k))`.
pub fn compensate_phase(samples: &[Complex64], phases: &[f64]) -> Result<Vec<Complex64>> {
    if samples.len() != phases.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            found: phases.len(),
        });
    }
    Ok(samples
        .iter()
        .zip(phases)
        .map(|(&x, &phi)| x * Complex64::from_polar(1.0, -phi))
        .collect())
}

/// Quantum band moved to DC by `−shift` Hz and matched-filtered.
fn matched_band(spectrum: &ReceivedSpectrum, shift: f64, rrc: &RrcFilter) -> Result<SampledSignal> {
    spectrum.filtered_band(shift, rrc.taps())
}

fn check_chain(chain: &ChainConfig, fs: f64) -> Result<RrcFilter> {
    if (chain.sample_rate() - fs).abs() > 1e-6 * fs {
        return Err(Error::param("sample_rate", "record rate does not match the chain"));
    }
    chain.rrc()
}

/// Symbols `edge..len-edge` of a decimated stream.
fn trim_edges(symbols: &[Complex64], edge: usize) -> Result<Vec<Complex64>> {
    if symbols.len() <= 2 * edge {
        return Err(Error::InsufficientData {
            needed: 2 * edge + 1,
            found: symbols.len(),
        });
    }
    Ok(symbols[edge..symbols.len() - edge].to_vec())
}

/// Downconverts the quantum band of `rx`, matched-filters it, removes φ(k)
/// and decimates at the timing phase that best correlates with `known`.
pub fn demodulate_quantum(
    rx: &SampledSignal,
    phase: &PhaseEstimate,
    chain: &ChainConfig,
    known: &[Complex64],
) -> Result<RecoveredFrame> {
    demodulate_spectrum(&ReceivedSpectrum::new(rx)?, phase, chain, known)
}

/// As [`demodulate_quantum`], starting from the record's spectrum.
pub fn demodulate_spectrum(
    spectrum: &ReceivedSpectrum,
    phase: &PhaseEstimate,
    chain: &ChainConfig,
    known: &[Complex64],
) -> Result<RecoveredFrame> {
    let rrc = check_chain(chain, spectrum.sample_rate())?;
    let sps = chain.samples_per_symbol;
    if spectrum.len() != known.len() * sps {
        return Err(Error::LengthMismatch {
            expected: known.len() * sps,
            found: spectrum.len(),
        });
    }
    let band = matched_band(spectrum, chain.if_freq + phase.freq_offset_hat, &rrc)?;
    let compensated = SampledSignal::new(compensate_phase(band.samples(), &phase.phases)?, band.sample_rate())?;

    let edge = chain.edge_symbols();
    let reference = trim_edges(known, edge)?;
    let mut scores = Vec::with_capacity(sps);
    for p in 0..sps {
        let y = decimate(&compensated, sps, p)?;
        let y = trim_edges(y.samples(), edge)?;
        scores.push(correlation_power(&reference, &y));
    }
    let timing_phase = pick_timing(&scores)?;
    let y = decimate(&compensated, sps, timing_phase)?;
    Ok(RecoveredFrame {
        symbols: trim_edges(y.samples(), edge)?,
        timing_phase,
        chain: chain.clone(),
    })
}

/// `|⟨x, y⟩|² / ‖y‖²`.
fn correlation_power(x: &[Complex64], y: &[Complex64]) -> f64 {
    let cross: Complex64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    let energy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    if energy > 0.0 {
        cross.norm_sqr() / energy
    } else {
        0.0
    }
}

/// Index of the best score. Fails when another circular local maximum comes
/// within [`TIMING_MARGIN_DB`] of it.
fn pick_timing(scores: &[f64]) -> Result<usize> {
    let n = scores.len();
    let (best, top) = scores
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (k, &s)| if s > b.1 { (k, s) } else { b });
    if !(top > 0.0) {
        return Err(Error::TimingAmbiguous { margin_db: 0.0 });
    }
    let runner = (0..n)
        .filter(|&k| k != best)
        .filter(|&k| scores[k] >= scores[(k + n - 1) % n] && scores[k] >= scores[(k + 1) % n])
        .map(|k| scores[k])
        .fold(0.0, f64::max);
    if runner > 0.0 {
        let margin_db = 10.0 * libm::log10(top / runner);
        if margin_db < TIMING_MARGIN_DB {
            return Err(Error::TimingAmbiguous { margin_db });
        }
    }
    Ok(best)
}

/// Runs a noise-only record through the quantum chain (no phase
/// compensation, which is unitary and leaves noise statistics unchanged)
/// and returns the edge-trimmed symbols.
pub fn process_noise_record(rx: &SampledSignal, chain: &ChainConfig) -> Result<Vec<Complex64>> {
    let rrc = check_chain(chain, rx.sample_rate())?;
    let band = matched_band(&ReceivedSpectrum::new(rx)?, chain.if_freq, &rrc)?;
    let y = decimate(&band, chain.samples_per_symbol, 0)?;
    trim_edges(y.samples(), chain.edge_symbols())
}
