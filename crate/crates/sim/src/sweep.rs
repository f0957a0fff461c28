use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::Context;
use cvqkd_core::link::{calibrate, run_frame, FrameOutcome};
use cvqkd_core::metrics::CalibrationRecord;
use rayon::prelude::*;
use serde::Serialize;

use crate::seeds::{calibration_seed, run_seed};
use crate::SweepConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Quadrature {
    I,
    Q,
}

impl Quadrature {
    pub fn label(self) -> &'static str {
        match self {
            Quadrature::I => "I",
            Quadrature::Q => "Q",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub rolloff: f64,
    pub vmod: f64,
    pub run: usize,
    pub seed: u64,
    pub outcome: FrameOutcome,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub rolloff: f64,
    pub vmod: f64,
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// Mean and standard error of ξ over the runs of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub rolloff: f64,
    pub vmod: f64,
    pub quadrature: Quadrature,
    pub xi_mean: f64,
    pub xi_sem: f64,
    pub vb_mean: f64,
    pub n_runs: usize,
    /// Symbols over all runs of the point.
    pub n_symbols: usize,
    pub n0_raw: f64,
    pub ndet_raw: f64,
    pub seed_base: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub calibrations: Vec<CalibrationRecord>,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub summary: Vec<PointSummary>,
}

/// One calibration per roll-off, then every (V_mod, run) of that roll-off in
/// parallel. The result depends only on the configuration.
pub fn run_sweep(config: &SweepConfig, progress: &(dyn Fn(&str) + Sync)) -> anyhow::Result<SweepOutcome> {
    config.validate()?;
    let cal_seed = calibration_seed(config.master_seed);
    let mut calibrations = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &rolloff in &config.rolloffs {
        let link = config.link_for(rolloff);
        let cal = calibrate(&link, cal_seed).with_context(|| format!("calibration at roll-off {rolloff}"))?;
        progress(&format!(
            "roll-off {rolloff}: n0 = {:.6e}, n_det = {:.4} SNU",
            cal.n0,
            cal.n_det_snu()
        ));
        let jobs: Vec<(f64, usize)> = config
            .vmods
            .iter()
            .flat_map(|&v| (0..config.runs_per_point).map(move |r| (v, r)))
            .collect();
        let results: Vec<Result<RunRecord, RunFailure>> = jobs
            .par_iter()
            .map(|&(vmod, run)| {
                let seed = run_seed(config.master_seed, rolloff, vmod, run);
                let start = Instant::now();
                run_frame(&link, vmod, &cal, seed)
                    .map(|outcome| RunRecord {
                        rolloff,
                        vmod,
                        run,
                        seed,
                        outcome,
                        wall_time_s: start.elapsed().as_secs_f64(),
                    })
                    .map_err(|e| RunFailure {
                        rolloff,
                        vmod,
                        run,
                        seed,
                        error: e.to_string(),
                    })
            })
            .collect();
        let before = failures.len();
        for r in results {
            match r {
                Ok(rec) => runs.push(rec),
                Err(f) => failures.push(f),
            }
        }
        progress(&format!(
            "roll-off {rolloff}: {} runs done, {} failed",
            jobs.len() - (failures.len() - before),
            failures.len() - before
        ));
        calibrations.push(cal);
    }
    let summary = aggregate(&runs, &calibrations, config.master_seed);
    Ok(SweepOutcome {
        calibrations,
        runs,
        failures,
        summary,
    })
}

fn key(rolloff: f64, vmod: f64) -> (i64, i64) {
    ((rolloff * 1e4).round() as i64, (vmod * 1e3).round() as i64)
}

/// Per-point statistics. Runs are ordered by index before summing, so the
/// table does not depend on the order `runs` arrive in.
pub fn aggregate(runs: &[RunRecord], calibrations: &[CalibrationRecord], seed_base: u64) -> Vec<PointSummary> {
    let mut points: BTreeMap<(i64, i64), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        points.entry(key(r.rolloff, r.vmod)).or_default().push(r);
    }
    let mut out = Vec::new();
    for group in points.values_mut() {
        group.sort_by_key(|r| r.run);
        let first = group[0];
        let cal = calibrations
            .iter()
            .find(|c| key(c.rolloff_used, 0.0).0 == key(first.rolloff, 0.0).0);
        for quad in [Quadrature::I, Quadrature::Q] {
            let (xi, vb): (Vec<f64>, Vec<f64>) = group
                .iter()
                .map(|r| {
                    let x = &r.outcome.result;
                    match quad {
                        Quadrature::I => (x.xi_i, x.vb_i),
                        Quadrature::Q => (x.xi_q, x.vb_q),
                    }
                })
                .unzip();
            let n = xi.len();
            let xi_mean = mean(&xi);
            let xi_sem = if n > 1 {
                let ss: f64 = xi.iter().map(|x| (x - xi_mean) * (x - xi_mean)).sum();
                (ss / (n - 1) as f64 / n as f64).sqrt()
            } else {
                f64::NAN
            };
            out.push(PointSummary {
                rolloff: first.rolloff,
                vmod: first.vmod,
                quadrature: quad,
                xi_mean,
                xi_sem,
                vb_mean: mean(&vb),
                n_runs: n,
                n_symbols: group.iter().map(|r| r.outcome.result.n_symbols).sum(),
                n0_raw: cal.map_or(f64::NAN, |c| c.n0),
                ndet_raw: cal.map_or(f64::NAN, |c| c.n_det),
                seed_base,
            });
        }
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
