//! A fast invariant suite for `cvqkd selftest`. Each check is small enough
//! to finish in seconds; the full-size versions live in the acceptance
//! tests.

use cvqkd_core::channel::wiener_phase;
use cvqkd_core::dsp::design_rrc;
use cvqkd_core::frontend::{electronic_measurement, vacuum_measurement, LoConfig};
use cvqkd_core::link::{calibrate, run_frame, run_single, Impairments, LinkConfig, Transmission};
use cvqkd_core::metrics::{excess_noise, normalize_to_snu};
use cvqkd_core::receiver::{process_noise_record, RecoveredFrame};
use cvqkd_core::rng::{rng_from_seed, uniform};
use cvqkd_core::stats::{mean_square, variance};
use cvqkd_core::transmitter::{band_edges, pilot_referenced_spectrum, LaserModel};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn small_link(rolloff: f64) -> LinkConfig {
    LinkConfig {
        roll_off: rolloff,
        n_symbols: 1 << 14,
        calibration_frames: 2,
        ..LinkConfig::default()
    }
}

fn excess_noise_formula() -> anyhow::Result<Check> {
    let mut rng = rng_from_seed(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let va = 0.5 + 20.0 * uniform(&mut rng);
        let t = 0.05 + 0.95 * uniform(&mut rng);
        let eta = 0.05 + 0.95 * uniform(&mut rng);
        let vb = 0.5 + 10.0 * uniform(&mut rng);
        let hand = vb - eta * t * (va + 1.0) / 2.0 - 0.5;
        worst = worst.max((excess_noise(vb, va, t, eta)? - hand).abs());
    }
    Ok(check("excess_noise_formula", worst <= 1e-12, format!("max error {worst:.3e}")))
}

fn vacuum_is_one_snu() -> anyhow::Result<Check> {
    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.2, 0.5] {
        let link = small_link(beta);
        let cal = calibrate(&link, 5)?;
        let lo = LoConfig {
            laser: LaserModel::default(),
            frequency_offset: 0.0,
        };
        let rec = vacuum_measurement(&lo, &link.detector, link.n_samples(), link.sample_rate(), 99)?;
        let frame = RecoveredFrame {
            symbols: process_noise_record(&rec, &link.chain())?,
            timing_phase: 0,
            chain: link.chain(),
        };
        let snu = normalize_to_snu(&frame, &cal)?;
        let i: Vec<f64> = snu.iter().map(|z| z.re).collect();
        let q: Vec<f64> = snu.iter().map(|z| z.im).collect();
        let v = 0.5 * (mean_square(&i) + mean_square(&q));
        worst = worst.max((v - 1.0).abs());
    }
    Ok(check("vacuum_is_one_snu", worst < 0.03, format!("max |var - 1| {worst:.4}")))
}

fn electronic_noise_closed_form() -> anyhow::Result<Check> {
    let link = LinkConfig::default();
    let det = &link.detector;
    let n = 1_000_000;
    let rec = electronic_measurement(det, n, link.sample_rate(), 3)?;
    let x: Vec<f64> = rec.samples().iter().map(|z| z.re).collect();
    let expected = det.noise_variance(0.0, link.sample_rate());
    let got = variance(&x);
    let se = expected * (2.0 / n as f64).sqrt();
    Ok(check(
        "electronic_noise_closed_form",
        (got - expected).abs() < 3.0 * se,
        format!("variance {got:.6e} vs {expected:.6e}"),
    ))
}

fn wiener_increments() -> anyhow::Result<Check> {
    let path = wiener_phase(1_000_001, 1e3, 1e9, 4)?;
    let ratio = variance(&path.increments()) / path.increment_variance();
    Ok(check("wiener_increment_variance", (ratio - 1.0).abs() < 0.05, format!("ratio {ratio:.4}")))
}

fn rrc_isi() -> anyhow::Result<Check> {
    let mut worst: f64 = 0.0;
    for beta in [0.2, 0.3, 0.4, 0.5] {
        worst = worst.max(design_rrc(beta, 20, 20)?.nyquist_isi());
    }
    Ok(check("rrc_isi_from_0.2", worst < 1e-3, format!("max ISI {worst:.3e}")))
}

fn spectrum_shape() -> anyhow::Result<Check> {
    let link = LinkConfig::default();
    let tx = Transmission::new(&link, 12)?;
    let spec = pilot_referenced_spectrum(&tx.rf, &link.pilots, link.symbol_rate, 5000)?;
    let (lo, hi) = band_edges(&spec, link.if_freq, 30.0);
    let bin = spec.resolution();
    let ok = (lo - 220e6).abs() <= bin + 1.0 && (hi - 280e6).abs() <= bin + 1.0;
    Ok(check("spectrum_band_edges", ok, format!("edges {lo:.4e} .. {hi:.4e} Hz")))
}

fn noiseless_loop() -> anyhow::Result<Check> {
    let link = LinkConfig {
        impairments: Impairments::none(),
        ..small_link(0.2)
    };
    let (_, out) = run_single(&link, 4.0, 8)?;
    let r = out.result;
    let err = (r.vb_i / r.va_i - 1.0).abs().max((r.vb_q / r.va_q - 1.0).abs());
    Ok(check("noiseless_vb_equals_va", err < 1e-3, format!("max |vb/va - 1| {err:.2e}")))
}

fn determinism() -> anyhow::Result<Check> {
    let link = small_link(0.2);
    let cal = calibrate(&link, 2)?;
    let a = run_frame(&link, 4.0, &cal, 17)?;
    let b = run_frame(&link, 4.0, &cal, 17)?;
    Ok(check(
        "run_determinism",
        a == b,
        format!("xi_i {:.6e}", a.result.xi_i),
    ))
}

type CheckFn = fn() -> anyhow::Result<Check>;

pub fn run_all() -> Vec<Check> {
    let suite: [(&'static str, CheckFn); 8] = [
        ("excess_noise_formula", excess_noise_formula),
        ("vacuum_is_one_snu", vacuum_is_one_snu),
        ("electronic_noise_closed_form", electronic_noise_closed_form),
        ("wiener_increment_variance", wiener_increments),
        ("rrc_isi_from_0.2", rrc_isi),
        ("spectrum_band_edges", spectrum_shape),
        ("noiseless_vb_equals_va", noiseless_loop),
        ("run_determinism", determinism),
    ];
    suite
        .iter()
        .map(|(name, f)| f().unwrap_or_else(|e| check(name, false, format!("error: {e:#}"))))
        .collect()
}
