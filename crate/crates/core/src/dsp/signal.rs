use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

/// A uniformly sampled waveform.
///
/// Real signals are stored as complex samples with zero imaginary part and
/// carry a flag so operations that need real input (the analytic signal) can
/// check it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    real: bool,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        if samples.is_empty() {
            return Err(Error::InvalidInput("signal must have at least one sample"));
        }
        Ok(SampledSignal {
            samples,
            sample_rate,
            real: false,
        })
    }

    pub fn from_real(samples: &[f64], sample_rate: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        if samples.is_empty() {
            return Err(Error::InvalidInput("signal must have at least one sample"));
        }
        Ok(SampledSignal {
            samples: samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            sample_rate,
            real: true,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.re).collect()
    }

    /// Mean of `|x|²`.
    pub fn mean_power(&self) -> f64 {
        crate::stats::mean_power(&self.samples)
    }

    /// Total energy `Σ|x|²`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Same rate, new complex samples.
    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        SampledSignal {
            samples,
            sample_rate: self.sample_rate,
            real: false,
        }
    }

    /// Same rate, new samples whose imaginary parts are discarded.
    pub(crate) fn with_real_samples(&self, mut samples: Vec<Complex64>) -> Self {
        for x in samples.iter_mut() {
            x.im = 0.0;
        }
        SampledSignal {
            samples,
            sample_rate: self.sample_rate,
            real: true,
        }
    }
}

fn check_rate(sample_rate: f64) -> Result<()> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::param("sample_rate", "must be positive and finite"));
    }
    Ok(())
}
