//! Balanced heterodyne detector and its two calibration modes.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::wiener_phase;
use crate::dsp::SampledSignal;
use crate::rng::{gaussian, rng_from_seed};
use crate::transmitter::LaserModel;
use crate::{Error, Result, BOLTZMANN, ELEMENTARY_CHARGE};

/// Which detector noise sources are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NoiseSwitches {
    /// LO shot noise.
    pub shot: bool,
    /// Johnson noise of the load.
    pub thermal: bool,
    /// Shot noise of the dark current.
    pub dark: bool,
}

impl Default for NoiseSwitches {
    fn default() -> Self {
        NoiseSwitches::all()
    }
}

impl NoiseSwitches {
    pub fn all() -> Self {
        NoiseSwitches {
            shot: true,
            thermal: true,
            dark: true,
        }
    }

    pub fn none() -> Self {
        NoiseSwitches {
            shot: false,
            thermal: false,
            dark: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DetectorParams {
    /// Quantum efficiency.
    pub eta: f64,
    /// Dark current, A.
    pub dark_current: f64,
    /// K.
    pub temperature: f64,
    /// Ω.
    pub load_resistance: f64,
    /// A/W, relative units.
    pub responsivity_scale: f64,
    pub noise: NoiseSwitches,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            eta: 0.85,
            dark_current: 1e-9,
            temperature: 293.0,
            load_resistance: 50.0,
            responsivity_scale: 1.0,
            noise: NoiseSwitches::all(),
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", "must lie in (0, 1]"));
        }
        if !(self.dark_current >= 0.0 && self.dark_current.is_finite()) {
            return Err(Error::param("dark_current", "must be non-negative"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::param("temperature", "must be non-negative"));
        }
        if !(self.load_resistance > 0.0 && self.load_resistance.is_finite()) {
            return Err(Error::param("load_resistance", "must be positive"));
        }
        if !(self.responsivity_scale >= 0.0 && self.responsivity_scale.is_finite()) {
            return Err(Error::param("responsivity_scale", "must be non-negative"));
        }
        Ok(())
    }

    /// Same detector with every noise source off.
    pub fn noiseless(&self) -> Self {
        DetectorParams {
            noise: NoiseSwitches::none(),
            ..self.clone()
        }
    }

    /// One-sided shot-noise PSD at LO power `lo_power`, A²/Hz.
    pub fn shot_psd(&self, lo_power: f64) -> f64 {
        let mut current = 0.0;
        if self.noise.shot {
            current += self.responsivity_scale * self.eta * lo_power;
        }
        if self.noise.dark {
            current += self.dark_current;
        }
        2.0 * ELEMENTARY_CHARGE * current
    }

    /// One-sided Johnson-noise PSD, A²/Hz.
    pub fn thermal_psd(&self) -> f64 {
        if self.noise.thermal {
            4.0 * BOLTZMANN * self.temperature / self.load_resistance
        } else {
            0.0
        }
    }

    /// Variance of one noise sample at `sample_rate`.
    pub fn noise_variance(&self, lo_power: f64, sample_rate: f64) -> f64 {
        (self.shot_psd(lo_power) + self.thermal_psd()) * sample_rate / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LoConfig {
    pub laser: LaserModel,
    /// LO detuning from the signal carrier, Hz.
    pub frequency_offset: f64,
}

impl LoConfig {
    fn validate(&self, sample_rate: f64) -> Result<()> {
        self.laser.validate()?;
        if !(libm::fabs(self.frequency_offset) < sample_rate / 4.0) {
            return Err(Error::param("frequency_offset", "too large for the sample rate"));
        }
        Ok(())
    }
}

/// Balanced photocurrent of `signal` beating with the LO:
/// `2·R·η·sqrt(P_lo)·Im{s·exp(−j(2π·f_off·k/fs + φ_lo))}` plus white
/// Gaussian detector noise. The LO phase path is drawn from its laser seed,
/// the detector noise from `seed`.
pub fn heterodyne_detect(signal: &SampledSignal, lo: &LoConfig, det: &DetectorParams, seed: u64) -> Result<SampledSignal> {
    let fs = signal.sample_rate();
    det.validate()?;
    lo.validate(fs)?;
    let n = signal.len();
    if n < 2 {
        return Err(Error::InvalidInput("signal needs at least two samples"));
    }
    let lo_phase = wiener_phase(n, lo.laser.linewidth, fs, lo.laser.seed)?;
    let gain = 2.0 * det.responsivity_scale * det.eta * libm::sqrt(lo.laser.power);
    let cycles = lo.frequency_offset / fs;
    let noise = detector_noise(det, lo.laser.power, n, fs, seed);
    let current: Vec<f64> = signal
        .samples()
        .iter()
        .zip(&lo_phase.phases)
        .zip(noise)
        .enumerate()
        .map(|(k, ((s, &phi), w))| {
            let turns = cycles * k as f64;
            let theta = 2.0 * PI * (turns - libm::floor(turns)) + phi;
            gain * (s * Complex64::from_polar(1.0, -theta)).im + w
        })
        .collect();
    SampledSignal::from_real(&current, fs)
}

fn detector_noise(det: &DetectorParams, lo_power: f64, n: usize, fs: f64, seed: u64) -> Vec<f64> {
    let var = det.noise_variance(lo_power, fs);
    if var == 0.0 {
        return vec![0.0; n];
    }
    gaussian(&mut rng_from_seed(seed), n, libm::sqrt(var))
}

/// Record with the signal input blocked: LO shot noise plus electronics.
pub fn vacuum_measurement(lo: &LoConfig, det: &DetectorParams, n: usize, sample_rate: f64, seed: u64) -> Result<SampledSignal> {
    let dark = SampledSignal::new(vec![Complex64::new(0.0, 0.0); n], sample_rate)?;
    heterodyne_detect(&dark, lo, det, seed)
}

/// Record with both optical inputs blocked: Johnson noise plus dark-current
/// shot noise.
pub fn electronic_measurement(det: &DetectorParams, n: usize, sample_rate: f64, seed: u64) -> Result<SampledSignal> {
    det.validate()?;
    if n < 2 {
        return Err(Error::param("n", "need at least two samples"));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::param("sample_rate", "must be positive"));
    }
    SampledSignal::from_real(&detector_noise(det, 0.0, n, sample_rate, seed), sample_rate)
}
