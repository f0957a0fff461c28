use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::SampledSignal;
use crate::{Error, Result};

/// Zero-insertion upsampling: `out[k·sps] = symbols[k]`, every other sample
/// zero, at `symbol_rate·sps`.
pub fn upsample(symbols: &[Complex64], symbol_rate: f64, sps: usize) -> Result<SampledSignal> {
    if sps < 2 {
        return Err(Error::param("sps", "must be at least 2"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); symbols.len() * sps];
    for (k, &s) in symbols.iter().enumerate() {
        out[k * sps] = s;
    }
    SampledSignal::new(out, symbol_rate * sps as f64)
}

/// Keeps every `factor`-th sample starting at `phase`.
pub fn decimate(signal: &SampledSignal, factor: usize, phase: usize) -> Result<SampledSignal> {
    if factor == 0 {
        return Err(Error::param("factor", "must be at least 1"));
    }
    if phase >= factor {
        return Err(Error::param("phase", "must be less than factor"));
    }
    if phase >= signal.len() {
        return Err(Error::InsufficientData {
            needed: phase + 1,
            found: signal.len(),
        });
    }
    let out: Vec<Complex64> = signal.samples().iter().skip(phase).step_by(factor).copied().collect();
    let decimated = SampledSignal::new(out, signal.sample_rate() / factor as f64)?;
    Ok(if signal.is_real() {
        decimated.with_real_samples(decimated.samples().to_vec())
    } else {
        decimated
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, -x)
    }

    #[test]
    fn upsample_inserts_zeros() {
        let s = upsample(&[c(1.0), c(2.0)], 10.0, 4).unwrap();
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(s.samples(), &[c(1.0), z, z, z, c(2.0), z, z, z]);
        assert_eq!(s.sample_rate(), 40.0);
    }

    #[test]
    fn upsample_frame_to_simulation_rate() {
        let symbols = vec![c(0.5); 1 << 15];
        let s = upsample(&symbols, 50e6, 20).unwrap();
        assert_eq!(s.len(), 655_360);
        assert_eq!(s.sample_rate(), 1e9);
    }

    #[test]
    fn upsample_power_bookkeeping() {
        // Unit-variance complex symbols: each quadrature carries 1/2.
        let symbols: Vec<Complex64> = (0..4096)
            .map(|k| Complex64::from_polar(1.0, k as f64 * 0.37))
            .collect();
        let s = upsample(&symbols, 1.0, 20).unwrap();
        assert!((s.mean_power() - 1.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn upsample_rejects_small_factor() {
        assert!(upsample(&[c(1.0)], 1.0, 1).is_err());
    }

    #[test]
    fn decimate_definition() {
        let x = SampledSignal::new((1..=6).map(|v| c(v as f64)).collect(), 6.0).unwrap();
        let y = decimate(&x, 2, 1).unwrap();
        assert_eq!(y.samples(), &[c(2.0), c(4.0), c(6.0)]);
        assert_eq!(y.sample_rate(), 3.0);
        assert_eq!(decimate(&x, 1, 0).unwrap(), x);
        assert!(decimate(&x, 2, 2).is_err());
    }
}
