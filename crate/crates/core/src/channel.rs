//! Laser phase noise, the variable attenuator and the back-to-back channel.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dsp::SampledSignal;
use crate::metrics::CalibrationRecord;
use crate::rng::{gaussian, rng_from_seed, uniform};
use crate::{Error, Result};

/// Root search gives up after this many probe evaluations.
pub const MAX_ATTENUATION_ITERATIONS: usize = 60;

/// Relative tolerance on the probe variance.
const VMOD_TOLERANCE: f64 = 1e-3;

/// Wiener phase path of a laser with Lorentzian linewidth.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoisePath {
    pub phases: Vec<f64>,
    pub linewidth: f64,
    pub sample_rate: f64,
    pub seed: u64,
}

impl PhaseNoisePath {
    /// Variance of one increment, rad².
    pub fn increment_variance(&self) -> f64 {
        2.0 * PI * self.linewidth / self.sample_rate
    }

    pub fn increments(&self) -> Vec<f64> {
        self.phases.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Cumulative sum of Gaussian increments with variance `2π·linewidth/fs`,
/// starting from a uniform phase in `[0, 2π)`.
pub fn wiener_phase(n: usize, linewidth: f64, sample_rate: f64, seed: u64) -> Result<PhaseNoisePath> {
    if n < 2 {
        return Err(Error::param("n", "need at least two samples"));
    }
    if !(linewidth >= 0.0 && linewidth.is_finite()) {
        return Err(Error::param("linewidth", "must be finite and non-negative"));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::param("sample_rate", "must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let start = 2.0 * PI * uniform(&mut rng);
    let std_dev = libm::sqrt(2.0 * PI * linewidth / sample_rate);
    let mut phases = Vec::with_capacity(n);
    phases.push(start);
    if std_dev == 0.0 {
        phases.resize(n, start);
    } else {
        let mut acc = start;
        for step in gaussian(&mut rng, n - 1, std_dev) {
            acc += step;
            phases.push(acc);
        }
    }
    Ok(PhaseNoisePath {
        phases,
        linewidth,
        sample_rate,
        seed,
    })
}

/// Power gain `gain` (amplitude `sqrt(gain)`), `0 < gain <= 1`.
pub fn attenuate(field: &SampledSignal, gain: f64) -> Result<SampledSignal> {
    if !(gain > 0.0 && gain <= 1.0) {
        return Err(Error::param("gain", "must lie in (0, 1]"));
    }
    let amp = libm::sqrt(gain);
    let out = field.samples().iter().map(|x| x * amp).collect();
    SampledSignal::new(out, field.sample_rate())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    /// Power transmittance; back-to-back means 1.
    pub transmittance: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams { transmittance: 1.0 }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(Error::param("transmittance", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Outcome of the attenuator search.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttenuationFit {
    pub gain: f64,
    /// Probe variance per quadrature at `gain`, SNU.
    pub va_i: f64,
    pub va_q: f64,
    /// Probe evaluations used.
    pub evaluations: usize,
}

impl AttenuationFit {
    pub fn va(&self) -> f64 {
        0.5 * (self.va_i + self.va_q)
    }
}

/// Finds the attenuator gain at which the noiseless probe reads `target_va`
/// SNU per quadrature (mean of I and Q), within 0.1 %.
///
/// `probe` maps a gain to the measured `(V_I, V_Q)` in SNU. The search runs
/// on `ln g` against `ln V − ln target`, which is linear when the probe is,
/// so a secant step from `g = 1` usually lands on the answer; an Illinois
/// false-position bracket takes over otherwise.
pub fn solve_attenuation_for_vmod<F>(
    target_va: f64,
    calibration: &CalibrationRecord,
    mut probe: F,
) -> Result<AttenuationFit>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if !(target_va > 0.0 && target_va.is_finite()) {
        return Err(Error::param("target_va", "must be positive"));
    }
    if !(calibration.n0 > 0.0) {
        return Err(Error::NonPositiveN0 { n0: calibration.n0 });
    }
    let tol = libm::log1p(VMOD_TOLERANCE);
    let mut evaluations = 0;
    let mut eval = |x: f64| -> Result<(f64, AttenuationFit)> {
        let gain = libm::exp(x);
        let (va_i, va_q) = probe(gain)?;
        evaluations += 1;
        let fit = AttenuationFit {
            gain,
            va_i,
            va_q,
            evaluations,
        };
        let v = fit.va();
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput("probe variance must be positive"));
        }
        Ok((libm::log(v / target_va), fit))
    };

    let (f0, fit0) = eval(0.0)?;
    if libm::fabs(f0) < tol {
        return Ok(fit0);
    }
    if f0 < 0.0 {
        return Err(Error::param("target_va", "exceeds the probe variance at unit gain"));
    }

    // a is the current best point, b the previous one.
    let mut b = (0.0, f0);
    let (fa, fit) = eval(-f0)?;
    let mut a = (-f0, fa);
    if libm::fabs(fa) < tol {
        return Ok(fit);
    }
    let mut bracketed = a.1 * b.1 < 0.0;
    for _ in 2..MAX_ATTENUATION_ITERATIONS {
        let denom = a.1 - b.1;
        if denom == 0.0 {
            break;
        }
        let x = (a.0 - a.1 * (a.0 - b.0) / denom).min(0.0);
        let (fx, fit) = eval(x)?;
        if libm::fabs(fx) < tol {
            return Ok(fit);
        }
        if bracketed {
            if fx * a.1 < 0.0 {
                b = a;
            } else {
                // Illinois: the retained end keeps only half its weight.
                b.1 *= 0.5;
            }
            a = (x, fx);
        } else {
            b = a;
            a = (x, fx);
            bracketed = a.1 * b.1 < 0.0;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ATTENUATION_ITERATIONS,
    })
}
