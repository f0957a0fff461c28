use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::{Error, Result};

/// Root-raised-cosine FIR filter with unit-energy, linear-phase taps.
#[derive(Debug, Clone, PartialEq)]
pub struct RrcFilter {
    roll_off: f64,
    span: usize,
    samples_per_symbol: usize,
    taps: Vec<f64>,
}

impl RrcFilter {
    pub fn roll_off(&self) -> f64 {
        self.roll_off
    }

    /// Filter length in symbols.
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    /// `span·samples_per_symbol + 1` taps, centered.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Group delay in samples.
    pub fn delay(&self) -> usize {
        self.taps.len() / 2
    }

    /// One-sided occupied bandwidth `(1+β)·R/2` for symbol rate `R`.
    pub fn half_bandwidth(&self, symbol_rate: f64) -> f64 {
        (1.0 + self.roll_off) * symbol_rate / 2.0
    }

    /// Worst residual of the matched pair at nonzero symbol lags, relative
    /// to the peak.
    pub fn nyquist_isi(&self) -> f64 {
        let h = &self.taps;
        let lag = |m: usize| -> f64 { h.iter().zip(&h[m..]).map(|(a, b)| a * b).sum() };
        let peak = lag(0);
        let mut worst: f64 = 0.0;
        let mut m = self.samples_per_symbol;
        while m < h.len() {
            worst = worst.max(libm::fabs(lag(m)));
            m += self.samples_per_symbol;
        }
        worst / peak
    }
}

/// Designs a root-raised-cosine filter.
///
/// `span` is the total length in symbols and must be even and at least 4.
/// The singular points `t = 0` and `t = ±T/(4β)` take their analytic limits.
pub fn design_rrc(roll_off: f64, span: usize, samples_per_symbol: usize) -> Result<RrcFilter> {
    if !(0.0..=1.0).contains(&roll_off) {
        return Err(Error::param("roll_off", "must lie in [0, 1]"));
    }
    if span < 4 || !span.is_multiple_of(2) {
        return Err(Error::param("span", "must be even and at least 4"));
    }
    if samples_per_symbol < 2 {
        return Err(Error::param("samples_per_symbol", "must be at least 2"));
    }

    let half = span * samples_per_symbol / 2;
    let mut taps = alloc::vec![0.0; 2 * half + 1];
    for i in 0..=half {
        let t = (half - i) as f64 / samples_per_symbol as f64;
        let h = rrc_impulse(t, roll_off);
        taps[i] = h;
        taps[2 * half - i] = h;
    }
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = 1.0 / libm::sqrt(energy);
    for h in taps.iter_mut() {
        *h *= scale;
    }
    Ok(RrcFilter {
        roll_off,
        span,
        samples_per_symbol,
        taps,
    })
}

/// Unnormalized RRC impulse response at `t` symbol periods.
fn rrc_impulse(t: f64, beta: f64) -> f64 {
    const EPS: f64 = 1e-9;
    if libm::fabs(t) < EPS {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && libm::fabs(libm::fabs(t) - 1.0 / (4.0 * beta)) < EPS {
        let arg = PI / (4.0 * beta);
        return beta / SQRT_2
            * ((1.0 + 2.0 / PI) * libm::sin(arg) + (1.0 - 2.0 / PI) * libm::cos(arg));
    }
    let num = libm::sin(PI * t * (1.0 - beta)) + 4.0 * beta * t * libm::cos(PI * t * (1.0 + beta));
    let den = PI * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Full self-convolution by the definition, no FFT.
    fn self_convolution(h: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; 2 * h.len() - 1];
        for (i, a) in h.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    fn isi_metric(f: &RrcFilter) -> f64 {
        let rc = self_convolution(f.taps());
        let center = rc.len() / 2;
        let sps = f.samples_per_symbol();
        let mut worst: f64 = 0.0;
        let mut k = sps;
        while k <= center {
            worst = worst.max(rc[center + k].abs()).max(rc[center - k].abs());
            k += sps;
        }
        worst / rc[center]
    }

    #[test]
    fn isi_method_agrees_with_full_convolution() {
        for beta in [0.0, 0.1, 0.25, 0.5] {
            let f = design_rrc(beta, 20, 20).unwrap();
            assert!((f.nyquist_isi() - isi_metric(&f)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(design_rrc(-0.1, 20, 20).is_err());
        assert!(design_rrc(1.1, 20, 20).is_err());
        assert!(design_rrc(0.2, 2, 20).is_err());
        assert!(design_rrc(0.2, 7, 20).is_err());
        assert!(design_rrc(0.2, 20, 1).is_err());
    }

    #[test]
    fn default_filter_is_nearly_nyquist() {
        let f = design_rrc(0.2, 20, 20).unwrap();
        assert_eq!(f.taps().len(), 401);
        assert!(isi_metric(&f) < 1e-3, "isi = {}", isi_metric(&f));
    }

    #[test]
    fn zero_roll_off_is_a_sinc() {
        let f = design_rrc(0.0, 40, 4).unwrap();
        let taps = f.taps();
        let c = f.delay();
        let peak = taps.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(taps[c], peak);
        for (i, &h) in taps.iter().enumerate() {
            let t = (i as f64 - c as f64) / 4.0;
            let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
            assert!((h / taps[c] - sinc).abs() < 1e-12, "tap {i}");
        }
    }

    #[test]
    fn half_roll_off_short_span_isi() {
        // Oracle: direct numerical self-convolution.
        let f = design_rrc(0.5, 16, 8).unwrap();
        assert!(isi_metric(&f) < 1e-3);
    }

    #[test]
    fn singular_points_use_the_limit() {
        // β = 0.25 puts t = ±1 on the grid, β = 0.5 puts t = ±0.5 there.
        for beta in [0.25, 0.5] {
            let f = design_rrc(beta, 8, 4).unwrap();
            let c = f.delay() as isize;
            let off = (4.0 / (4.0 * beta)) as isize;
            let at = f.taps()[(c + off) as usize];
            let near_l = rrc_impulse(1.0 / (4.0 * beta) - 1e-6, beta);
            let near_r = rrc_impulse(1.0 / (4.0 * beta) + 1e-6, beta);
            let scale = f.taps()[c as usize] / rrc_impulse(0.0, beta);
            assert!((at / scale - 0.5 * (near_l + near_r)).abs() < 1e-5);
        }
    }

    #[test]
    fn nyquist_isi_over_roll_off_grid() {
        for k in 2..=5 {
            let f = design_rrc(k as f64 / 10.0, 20, 20).unwrap();
            assert!(isi_metric(&f) < 1e-3, "beta = {}", k as f64 / 10.0);
        }
    }

    #[test]
    fn small_roll_off_isi_is_set_by_truncation() {
        // The tails decay too slowly for a 20-symbol window when β < 0.2;
        // doubling the span brings β = 0.1 under 1e-3, β = 0 stays a
        // truncated sinc and only improves slowly.
        let isi = |beta, span| isi_metric(&design_rrc(beta, span, 20).unwrap());
        assert!(isi(0.1, 20) > 1e-3);
        assert!(isi(0.1, 40) < 1e-3);
        assert!(isi(0.0, 40) < isi(0.0, 20));
        assert!(isi(0.0, 20) > 1e-2);
    }

    proptest! {
        #[test]
        fn taps_are_symmetric_with_unit_energy(
            beta in 0.0f64..=1.0,
            half_span in 2usize..12,
            sps in 2usize..24,
        ) {
            let f = design_rrc(beta, 2 * half_span, sps).unwrap();
            let taps = f.taps();
            prop_assert_eq!(taps.len(), 2 * half_span * sps + 1);
            let energy: f64 = taps.iter().map(|h| h * h).sum();
            prop_assert!((energy - 1.0).abs() < 1e-9);
            let peak = taps.iter().fold(0.0f64, |m, h| m.max(h.abs()));
            for i in 0..taps.len() / 2 {
                prop_assert!((taps[i] - taps[taps.len() - 1 - i]).abs() <= 1e-12 * peak);
            }
            prop_assert!(taps.iter().all(|h| h.is_finite()));
        }
    }
}
