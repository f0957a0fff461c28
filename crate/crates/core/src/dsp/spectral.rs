use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{bin_frequency, SampledSignal};
use crate::fft::Fft;
use crate::{Error, Result};

/// Multiplies by `exp(+j2π·f_shift·k/fs)`.
pub fn frequency_shift(signal: &SampledSignal, f_shift: f64) -> Result<SampledSignal> {
    let fs = signal.sample_rate();
    if !(libm::fabs(f_shift) < fs / 2.0) {
        return Err(Error::param("f_shift", "must be below the Nyquist frequency"));
    }
    if f_shift == 0.0 {
        return Ok(signal.clone());
    }
    let cycles = f_shift / fs;
    let out = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let turns = cycles * k as f64;
            x * Complex64::from_polar(1.0, 2.0 * PI * (turns - libm::floor(turns)))
        })
        .collect();
    Ok(signal.with_samples(out))
}

/// Analytic signal of a real input by frequency-domain construction:
/// positive bins doubled, negative bins zeroed, DC and Nyquist kept.
pub fn analytic_signal(signal: &SampledSignal) -> Result<SampledSignal> {
    if !signal.is_real() {
        return Err(Error::InvalidInput("analytic signal needs a real-valued input"));
    }
    let n = signal.len();
    let plan = Fft::new(n);
    let mut spec = signal.samples().to_vec();
    plan.forward(&mut spec);
    let half = n / 2;
    for (k, bin) in spec.iter_mut().enumerate().skip(1) {
        if k < n.div_ceil(2) {
            *bin *= 2.0;
        } else if !(n.is_multiple_of(2) && k == half) {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    plan.inverse_normalized(&mut spec);
    // Re(analytic) is the input by construction; drop the rounding residue.
    for (out, inp) in spec.iter_mut().zip(signal.samples()) {
        out.re = inp.re;
    }
    Ok(signal.with_samples(spec))
}

/// Welch power spectrum with a periodic Hann window and 50 % overlap.
///
/// Bin values are power per bin calibrated for tones: a tone of power `P`
/// centered on a bin reads `P`. Broadband components read their PSD times
/// [`Spectrum::enbw`]. Bins run from `-fs/2` upward.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Equivalent noise bandwidth of one bin, Hz.
    pub enbw: f64,
    pub segments: usize,
}

pub fn power_spectrum(signal: &SampledSignal, nfft: usize) -> Result<Spectrum> {
    if nfft < 64 {
        return Err(Error::param("nfft", "must be at least 64"));
    }
    let fs = signal.sample_rate();
    let window: Vec<f64> = (0..nfft)
        .map(|k| 0.5 - 0.5 * libm::cos(2.0 * PI * k as f64 / nfft as f64))
        .collect();
    let sum_w: f64 = window.iter().sum();
    let sum_w2: f64 = window.iter().map(|w| w * w).sum();

    let x = signal.samples();
    let hop = nfft / 2;
    let starts: Vec<usize> = if x.len() <= nfft {
        vec![0]
    } else {
        (0..=(x.len() - nfft) / hop).map(|s| s * hop).collect()
    };

    let plan = Fft::new(nfft);
    let mut acc = vec![0.0; nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for &start in &starts {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = x.get(start + k).copied().unwrap_or_default() * window[k];
        }
        plan.forward(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (starts.len() as f64 * sum_w * sum_w);

    let first = nfft - nfft / 2;
    let order = (first..nfft).chain(0..first);
    let (freqs, power) = order.map(|k| (bin_frequency(k, nfft, fs), acc[k] * scale)).unzip();
    Ok(Spectrum {
        freqs,
        power,
        enbw: fs * sum_w2 / (sum_w * sum_w),
        segments: starts.len(),
    })
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        if self.freqs.len() < 2 {
            return 0.0;
        }
        self.freqs[1] - self.freqs[0]
    }

    /// Index of the bin closest to `freq`.
    pub fn bin_of(&self, freq: f64) -> usize {
        let step = self.resolution();
        let idx = libm::round((freq - self.freqs[0]) / step);
        (idx.max(0.0) as usize).min(self.len() - 1)
    }

    /// Strongest bin as `(index, power)`.
    pub fn peak(&self) -> (usize, f64) {
        self.power
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, p)| if p > best.1 { (i, p) } else { best })
    }

    /// Every bin divided by `reference`.
    pub fn normalized(&self, reference: f64) -> Spectrum {
        Spectrum {
            power: self.power.iter().map(|p| p / reference).collect(),
            ..self.clone()
        }
    }

    /// Normalized so the strongest bin reads 0 dB.
    pub fn normalized_to_peak(&self) -> Spectrum {
        self.normalized(self.peak().1)
    }

    /// Bin powers in dB; empty bins floor at -400 dB.
    pub fn to_db(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|&p| if p > 0.0 { 10.0 * libm::log10(p) } else { -400.0 })
            .collect()
    }

    /// Power spectral density, per Hz.
    pub fn density(&self) -> Vec<f64> {
        self.power.iter().map(|p| p / self.enbw).collect()
    }
}
