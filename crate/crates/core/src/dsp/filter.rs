use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{bin_frequency, SampledSignal};
use crate::fft::{fast_len, Fft};
use crate::{Error, Result};

/// Signals longer than this are convolved in the frequency domain.
const DIRECT_LIMIT: usize = 4096;

/// Linear convolution with `taps`, shifted by the group delay `(len-1)/2` so
/// the output lines up with the input. Output length equals input length;
/// edge transients are kept.
pub fn fir_filter(signal: &SampledSignal, taps: &[f64]) -> Result<SampledSignal> {
    if taps.is_empty() {
        return Err(Error::param("taps", "must not be empty"));
    }
    let out = if signal.len() > DIRECT_LIMIT && taps.len() > 16 {
        convolve_fft(signal.samples(), taps)
    } else {
        convolve_direct(signal.samples(), taps)
    };
    Ok(if signal.is_real() {
        signal.with_real_samples(out)
    } else {
        signal.with_samples(out)
    })
}

fn convolve_direct(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = x.len() as isize;
    let delay = ((taps.len() - 1) / 2) as isize;
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &h) in taps.iter().enumerate() {
                let j = i + delay - k as isize;
                if (0..n).contains(&j) {
                    acc += x[j as usize] * h;
                }
            }
            acc
        })
        .collect()
}

fn convolve_fft(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let full = n + taps.len() - 1;
    let size = fast_len(full);
    let plan = Fft::new(size);

    let mut a = vec![Complex64::new(0.0, 0.0); size];
    a[..n].copy_from_slice(x);
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    for (slot, &h) in b.iter_mut().zip(taps) {
        *slot = Complex64::new(h, 0.0);
    }
    plan.forward(&mut a);
    plan.forward(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    plan.inverse_normalized(&mut a);

    let delay = (taps.len() - 1) / 2;
    a.drain(..delay);
    a.truncate(n);
    a
}

/// Ideal low-pass filter applied to the whole frame: FFT bins with
/// `|f| <= cutoff` keep unit gain, the rest are zeroed.
pub fn brickwall_lowpass(signal: &SampledSignal, cutoff: f64) -> Result<SampledSignal> {
    let fs = signal.sample_rate();
    if !(cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(Error::param("cutoff", "must lie in (0, sample_rate/2)"));
    }
    let n = signal.len();
    let plan = Fft::new(n);
    let mut spec = signal.samples().to_vec();
    plan.forward(&mut spec);
    for (k, bin) in spec.iter_mut().enumerate() {
        if libm::fabs(bin_frequency(k, n, fs)) > cutoff {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    plan.inverse_normalized(&mut spec);
    Ok(if signal.is_real() {
        signal.with_real_samples(spec)
    } else {
        signal.with_samples(spec)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, rng_from_seed};
    use crate::stats::variance;
    use core::f64::consts::PI;

    fn noise_signal(n: usize, sigma: f64, seed: u64) -> SampledSignal {
        SampledSignal::from_real(&gaussian(&mut rng_from_seed(seed), n, sigma), 1e9).unwrap()
    }

    fn tone(n: usize, f: f64, fs: f64) -> SampledSignal {
        let s = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 / fs))
            .collect();
        SampledSignal::new(s, fs).unwrap()
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = noise_signal(5000, 1.0, 1);
        let y = fir_filter(&x, &[1.0]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn impulse_returns_centered_taps() {
        let mut imp = vec![0.0; 64];
        imp[30] = 1.0;
        let x = SampledSignal::from_real(&imp, 1.0).unwrap();
        let taps = [0.5, -1.0, 2.0, -1.0, 0.5];
        let y = fir_filter(&x, &taps).unwrap();
        for (k, &h) in taps.iter().enumerate() {
            assert_eq!(y.samples()[28 + k].re, h);
        }
        assert_eq!(y.samples()[27].re, 0.0);
        assert_eq!(y.samples()[33].re, 0.0);
    }

    #[test]
    fn fft_path_agrees_with_direct() {
        let taps = crate::dsp::design_rrc(0.3, 20, 20).unwrap();
        let mut rng = rng_from_seed(5);
        let re = gaussian(&mut rng, 20_000, 1.0);
        let im = gaussian(&mut rng, 20_000, 1.0);
        let x: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let direct = convolve_direct(&x, taps.taps());
        let fast = convolve_fft(&x, taps.taps());
        let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = direct.iter().zip(&fast).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err / scale < 1e-9, "relative error {err}");
    }

    #[test]
    fn noise_gain_equals_tap_energy() {
        // Monte Carlo oracle: var(out) = σ²·Σh² within 3 standard errors.
        let n = 1_000_000;
        let sigma = 1.5;
        let taps: Vec<f64> = (0..31).map(|k| 0.1 + 0.02 * k as f64).collect();
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        let y = fir_filter(&noise_signal(n, sigma, 7), &taps).unwrap();
        let out = &y.real_parts()[100..n - 100];
        let expected = sigma * sigma * energy;
        // Sample variance of correlated Gaussian noise: var(s²) = 2σ⁴·Σρ²/n,
        // with ρ the normalized tap autocorrelation.
        let rho_sq: f64 = (-(taps.len() as isize) + 1..taps.len() as isize)
            .map(|lag| {
                let r: f64 = (0..taps.len() as isize)
                    .filter(|k| (0..taps.len() as isize).contains(&(k + lag)))
                    .map(|k| taps[k as usize] * taps[(k + lag) as usize])
                    .sum();
                (r / energy).powi(2)
            })
            .sum();
        let se = expected * (2.0 * rho_sq / out.len() as f64).sqrt();
        assert!((variance(out) - expected).abs() < 3.0 * se);
    }

    #[test]
    fn in_band_tone_passes_unchanged() {
        let x = tone(10_000, 10e6, 1e9);
        let y = brickwall_lowpass(&x, 50e6).unwrap();
        let err = x.samples().iter().zip(y.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn out_of_band_tone_is_removed() {
        let x = tone(10_000, 100e6, 1e9);
        let y = brickwall_lowpass(&x, 50e6).unwrap();
        assert!(10.0 * y.mean_power().log10() <= -100.0);
    }

    #[test]
    fn brickwall_noise_bandwidth_law() {
        let n = 1_000_000;
        let y = brickwall_lowpass(&noise_signal(n, 1.0, 9), 50e6).unwrap();
        assert!(y.is_real());
        let v = variance(&y.real_parts());
        let expected = 2.0 * 50e6 / 1e9;
        // Output is band-limited to 10% of Nyquist: ~n/10 independent samples.
        let se = expected * (2.0 / (n as f64 * 0.1)).sqrt();
        assert!((v - expected).abs() < 3.0 * se, "v = {v}");
    }

    #[test]
    fn brickwall_rejects_bad_cutoff() {
        let x = tone(64, 1.0, 10.0);
        assert!(brickwall_lowpass(&x, 0.0).is_err());
        assert!(brickwall_lowpass(&x, 5.0).is_err());
    }

    #[test]
    fn empty_taps_rejected() {
        assert!(fir_filter(&tone(8, 1.0, 10.0), &[]).is_err());
    }
}
