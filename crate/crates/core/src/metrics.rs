//! Shot-noise-unit calibration and the excess-noise estimate.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::receiver::{ChainConfig, RecoveredFrame};
use crate::stats::{mean, mean_square, variance};
use crate::{Error, Result};

/// Fewest symbols a variance estimate is reported for.
pub const MIN_SYMBOLS: usize = 1000;

/// Shot-noise unit measured through one receiver chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationRecord {
    /// Per-quadrature variance of the vacuum record, raw units.
    pub n_total: f64,
    /// Per-quadrature variance of the electronic-only record, raw units.
    pub n_det: f64,
    /// `n_total − n_det`.
    pub n0: f64,
    pub rolloff_used: f64,
    /// Symbols per record that went into each variance.
    pub n_symbols: usize,
    pub chain: ChainConfig,
}

impl CalibrationRecord {
    /// Electronic noise in SNU.
    pub fn n_det_snu(&self) -> f64 {
        self.n_det / self.n0
    }

    #[cfg(test)]
    pub(crate) fn for_tests(n_total: f64, n_det: f64) -> Self {
        CalibrationRecord {
            n_total,
            n_det,
            n0: n_total - n_det,
            rolloff_used: 0.2,
            n_symbols: 1 << 15,
            chain: ChainConfig::default(),
        }
    }
}

/// Mean of the two per-quadrature variances, taken about zero.
fn quadrature_power(symbols: &[Complex64]) -> f64 {
    let (i, q) = split(symbols);
    0.5 * (mean_square(&i) + mean_square(&q))
}

fn split(symbols: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    symbols.iter().map(|s| (s.re, s.im)).unzip()
}

/// Builds the calibration from chain outputs of a vacuum record and an
/// electronic-only record. Both must come from the chain in `chain`.
pub fn calibrate_snu(vacuum: &[Complex64], electronic: &[Complex64], chain: &ChainConfig) -> Result<CalibrationRecord> {
    for rec in [vacuum, electronic] {
        if rec.len() < MIN_SYMBOLS {
            return Err(Error::InsufficientData {
                needed: MIN_SYMBOLS,
                found: rec.len(),
            });
        }
    }
    let n_total = quadrature_power(vacuum);
    let n_det = quadrature_power(electronic);
    let n0 = n_total - n_det;
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::NonPositiveN0 { n0 });
    }
    Ok(CalibrationRecord {
        n_total,
        n_det,
        n0,
        rolloff_used: chain.roll_off,
        n_symbols: vacuum.len(),
        chain: chain.clone(),
    })
}

/// Symbols rescaled so variances read in SNU. The frame must come from the
/// chain the calibration was measured on.
pub fn normalize_to_snu(frame: &RecoveredFrame, cal: &CalibrationRecord) -> Result<Vec<Complex64>> {
    if frame.chain != cal.chain {
        return Err(Error::ConfigMismatch);
    }
    if !(cal.n0 > 0.0) {
        return Err(Error::NonPositiveN0 { n0: cal.n0 });
    }
    let scale = 1.0 / libm::sqrt(cal.n0);
    Ok(frame.symbols.iter().map(|s| s * scale).collect())
}

/// `ξ = V_B − ηT(V_A + 1)/2 − 1/2`, all in SNU.
pub fn excess_noise(vb: f64, va: f64, transmittance: f64, eta: f64) -> Result<f64> {
    if !(va > 0.0 && va.is_finite()) {
        return Err(Error::param("va", "must be positive"));
    }
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(Error::param("transmittance", "must lie in (0, 1]"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::param("eta", "must lie in (0, 1]"));
    }
    if !vb.is_finite() {
        return Err(Error::param("vb", "must be finite"));
    }
    Ok(vb - eta * transmittance * (va + 1.0) / 2.0 - 0.5)
}

/// Per-quadrature variance of Bob's symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VbEstimate {
    pub vb_i: f64,
    pub vb_q: f64,
    /// Set when a quadrature mean was significant and got removed.
    pub mean_removed_i: bool,
    pub mean_removed_q: bool,
}

/// Unbiased variance per quadrature. The symbols are zero-mean by
/// construction, so variance is taken about zero unless the sample mean is
/// more than 5 standard errors away, in which case it is subtracted and
/// flagged.
pub fn estimate_vb(symbols: &[Complex64]) -> Result<VbEstimate> {
    if symbols.len() < MIN_SYMBOLS {
        return Err(Error::InsufficientData {
            needed: MIN_SYMBOLS,
            found: symbols.len(),
        });
    }
    let (i, q) = split(symbols);
    let one = |x: &[f64]| {
        let about_zero = mean_square(x);
        let se = libm::sqrt(about_zero / x.len() as f64);
        if libm::fabs(mean(x)) > 5.0 * se {
            (variance(x), true)
        } else {
            (about_zero, false)
        }
    };
    let (vb_i, mean_removed_i) = one(&i);
    let (vb_q, mean_removed_q) = one(&q);
    Ok(VbEstimate {
        vb_i,
        vb_q,
        mean_removed_i,
        mean_removed_q,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExcessNoiseResult {
    pub xi_i: f64,
    pub xi_q: f64,
    pub vb_i: f64,
    pub vb_q: f64,
    /// Calibrated modulation variance per quadrature and their mean, SNU.
    pub va_i: f64,
    pub va_q: f64,
    pub va: f64,
    pub transmittance: f64,
    pub eta: f64,
    pub n_symbols: usize,
}

impl ExcessNoiseResult {
    /// Applies the excess-noise formula to each quadrature with its own V_A.
    pub fn evaluate(vb: &VbEstimate, va_i: f64, va_q: f64, transmittance: f64, eta: f64, n_symbols: usize) -> Result<Self> {
        if n_symbols < MIN_SYMBOLS {
            return Err(Error::InsufficientData {
                needed: MIN_SYMBOLS,
                found: n_symbols,
            });
        }
        Ok(ExcessNoiseResult {
            xi_i: excess_noise(vb.vb_i, va_i, transmittance, eta)?,
            xi_q: excess_noise(vb.vb_q, va_q, transmittance, eta)?,
            vb_i: vb.vb_i,
            vb_q: vb.vb_q,
            va_i,
            va_q,
            va: 0.5 * (va_i + va_q),
            transmittance,
            eta,
            n_symbols,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::rng::{gaussian, rng_from_seed};
    use proptest::prelude::*;

    fn complex_noise(n: usize, std: f64, seed: u64) -> Vec<Complex64> {
        let mut rng = rng_from_seed(seed);
        let i = gaussian(&mut rng, n, std);
        let q = gaussian(&mut rng, n, std);
        i.into_iter().zip(q).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    fn frame(symbols: Vec<Complex64>, chain: ChainConfig) -> RecoveredFrame {
        RecoveredFrame {
            symbols,
            timing_phase: 0,
            chain,
        }
    }

    #[test]
    fn excess_noise_examples() {
        let eta: f64 = 0.85;
        let vb = eta * 2.5 + 0.5;
        assert!(excess_noise(vb, 4.0, 1.0, eta).unwrap().abs() < 1e-15);
        let xi = excess_noise(2.7, 4.0, 1.0, 0.85).unwrap();
        assert!((xi - 0.075).abs() < 1e-12);
        assert_eq!(excess_noise(2.0, 2.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn excess_noise_rejects_bad_parameters() {
        assert!(excess_noise(1.0, 0.0, 1.0, 0.85).is_err());
        assert!(excess_noise(1.0, 2.0, 0.0, 0.85).is_err());
        assert!(excess_noise(1.0, 2.0, 1.0, 1.5).is_err());
        assert!(excess_noise(f64::NAN, 2.0, 1.0, 0.85).is_err());
    }

    #[test]
    fn calibration_subtracts_electronic_noise() {
        let chain = ChainConfig::default();
        let vac = complex_noise(100_000, 2.0, 1);
        let ele = complex_noise(100_000, 0.5, 2);
        let cal = calibrate_snu(&vac, &ele, &chain).unwrap();
        assert!((cal.n_total - 4.0).abs() < 3.0 * 4.0 * (1.0 / 100_000f64).sqrt());
        assert!((cal.n0 - (cal.n_total - cal.n_det)).abs() < 1e-15);
        assert_eq!(cal.rolloff_used, chain.roll_off);

        let silent = vec![Complex64::new(0.0, 0.0); 100_000];
        let cal = calibrate_snu(&vac, &silent, &chain).unwrap();
        assert_eq!(cal.n_det, 0.0);
        assert_eq!(cal.n0, cal.n_total);
    }

    #[test]
    fn calibration_rejects_inverted_records() {
        let chain = ChainConfig::default();
        let weak = complex_noise(10_000, 1.0, 3);
        let strong = complex_noise(10_000, 2.0, 4);
        assert!(matches!(calibrate_snu(&weak, &strong, &chain), Err(Error::NonPositiveN0 { .. })));
        assert!(calibrate_snu(&weak[..10], &strong, &chain).is_err());
    }

    #[test]
    fn vacuum_normalizes_to_one() {
        let chain = ChainConfig::default();
        let vac = complex_noise(200_000, 3.0, 5);
        let ele = complex_noise(200_000, 0.1, 6);
        let cal = calibrate_snu(&vac, &ele, &chain).unwrap();
        let snu = normalize_to_snu(&frame(vac, chain.clone()), &cal).unwrap();
        let vb = estimate_vb(&snu).unwrap();
        let expected = cal.n_total / cal.n0;
        assert!((0.5 * (vb.vb_i + vb.vb_q) - expected).abs() < 1e-12);
        let snu = normalize_to_snu(&frame(ele, chain), &cal).unwrap();
        let vb = estimate_vb(&snu).unwrap();
        assert!((0.5 * (vb.vb_i + vb.vb_q) - cal.n_det_snu()).abs() < 1e-12);
    }

    #[test]
    fn normalization_checks_the_chain() {
        let chain = ChainConfig::default();
        let other = ChainConfig {
            roll_off: 0.3,
            ..chain.clone()
        };
        let cal = CalibrationRecord::for_tests(2.0, 0.5);
        let err = normalize_to_snu(&frame(complex_noise(2000, 1.0, 7), other), &cal).unwrap_err();
        assert_eq!(err, Error::ConfigMismatch);
    }

    #[test]
    fn vb_of_unit_gaussian() {
        let n = 100_000;
        let vb = estimate_vb(&complex_noise(n, 1.0, 8)).unwrap();
        for v in [vb.vb_i, vb.vb_q] {
            assert!((v - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
        }
        assert!(!vb.mean_removed_i && !vb.mean_removed_q);
    }

    #[test]
    fn vb_scales_quadratically_and_flags_offsets() {
        let x = complex_noise(10_000, 1.0, 9);
        let base = estimate_vb(&x).unwrap();
        let scaled: Vec<Complex64> = x.iter().map(|s| s * 3.0).collect();
        let vb = estimate_vb(&scaled).unwrap();
        assert!((vb.vb_i / base.vb_i - 9.0).abs() < 1e-12);

        let shifted: Vec<Complex64> = x.iter().map(|s| s + Complex64::new(0.5, 0.0)).collect();
        let vb = estimate_vb(&shifted).unwrap();
        assert!(vb.mean_removed_i && !vb.mean_removed_q);
        assert!((vb.vb_i - variance(&split(&x).0)).abs() < 1e-12);
        assert!(estimate_vb(&x[..999]).is_err());
    }

    #[test]
    fn result_uses_per_quadrature_va() {
        let vb = VbEstimate {
            vb_i: 2.7,
            vb_q: 2.8,
            mean_removed_i: false,
            mean_removed_q: false,
        };
        let r = ExcessNoiseResult::evaluate(&vb, 4.0, 4.2, 1.0, 0.85, 32_000).unwrap();
        assert!((r.xi_i - 0.075).abs() < 1e-12);
        assert!((r.xi_q - (2.8 - 0.85 * 5.2 / 2.0 - 0.5)).abs() < 1e-12);
        assert!((r.va - 4.1).abs() < 1e-12);
        assert!(ExcessNoiseResult::evaluate(&vb, 4.0, 4.0, 1.0, 0.85, 10).is_err());
    }

    proptest! {
        #[test]
        fn xi_is_invariant_under_common_rescaling(
            vb_raw in 0.1f64..1e3,
            n0 in 1e-3f64..1e3,
            va in 0.5f64..20.0,
            eta in 0.1f64..1.0,
            t in 0.1f64..1.0,
            scale in 1e-6f64..1e6,
        ) {
            let a = excess_noise(vb_raw / n0, va, t, eta).unwrap();
            let b = excess_noise(vb_raw * scale / (n0 * scale), va, t, eta).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn xi_matches_direct_evaluation(
            vb in 0.0f64..50.0,
            va in 0.1f64..20.0,
            eta in 0.01f64..=1.0,
            t in 0.01f64..=1.0,
        ) {
            let direct = vb - eta * t * (va + 1.0) / 2.0 - 0.5;
            prop_assert!((excess_noise(vb, va, t, eta).unwrap() - direct).abs() <= 1e-12);
        }
    }
}
