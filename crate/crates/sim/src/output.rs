//! CSV tables and the JSON run manifest.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use cvqkd_core::dsp::Spectrum;
use cvqkd_core::metrics::CalibrationRecord;
use serde::Serialize;

use crate::sweep::{PointSummary, RunFailure, RunRecord};

pub const SUMMARY_HEADER: [&str; 11] = [
    "rolloff",
    "vmod_snu",
    "quadrature",
    "xi_mean_snu",
    "xi_sem_snu",
    "vb_mean_snu",
    "n_runs",
    "n_symbols",
    "n0_raw",
    "ndet_raw",
    "seed_base",
];

/// Thirteen significant digits, round-trippable.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        x.to_string()
    }
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> anyhow::Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Rows are written sorted by roll-off, V_mod and quadrature.
pub fn write_summary_csv(path: &Path, rows: &[PointSummary]) -> anyhow::Result<()> {
    let mut sorted: Vec<&PointSummary> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.rolloff
            .total_cmp(&b.rolloff)
            .then(a.vmod.total_cmp(&b.vmod))
            .then(a.quadrature.cmp(&b.quadrature))
    });
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in sorted {
        w.write_record([
            fmt_f64(r.rolloff),
            fmt_f64(r.vmod),
            r.quadrature.label().to_string(),
            fmt_f64(r.xi_mean),
            fmt_f64(r.xi_sem),
            fmt_f64(r.vb_mean),
            r.n_runs.to_string(),
            r.n_symbols.to_string(),
            fmt_f64(r.n0_raw),
            fmt_f64(r.ndet_raw),
            r.seed_base.to_string(),
        ])?;
    }
    finish(w, path)
}

/// One row per run. Wall time is left out so the file is reproducible.
pub fn write_runs_csv(path: &Path, runs: &[RunRecord]) -> anyhow::Result<()> {
    let mut sorted: Vec<&RunRecord> = runs.iter().collect();
    sorted.sort_by(|a, b| {
        a.rolloff
            .total_cmp(&b.rolloff)
            .then(a.vmod.total_cmp(&b.vmod))
            .then(a.run.cmp(&b.run))
    });
    let mut w = writer(path)?;
    w.write_record([
        "rolloff",
        "vmod_snu",
        "run",
        "seed",
        "xi_i_snu",
        "xi_q_snu",
        "vb_i_snu",
        "vb_q_snu",
        "va_i_snu",
        "va_q_snu",
        "attenuator_gain",
        "lo_offset_hz",
        "lo_offset_hat_hz",
        "timing_phase",
        "mean_removed",
        "n_symbols",
    ])?;
    for r in sorted {
        let x = &r.outcome.result;
        w.write_record([
            fmt_f64(r.rolloff),
            fmt_f64(r.vmod),
            r.run.to_string(),
            r.seed.to_string(),
            fmt_f64(x.xi_i),
            fmt_f64(x.xi_q),
            fmt_f64(x.vb_i),
            fmt_f64(x.vb_q),
            fmt_f64(x.va_i),
            fmt_f64(x.va_q),
            fmt_f64(r.outcome.attenuation.gain),
            fmt_f64(r.outcome.lo_offset),
            fmt_f64(-r.outcome.freq_offset_hat),
            r.outcome.timing_phase.to_string(),
            r.outcome.mean_removed.to_string(),
            x.n_symbols.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_failures_csv(path: &Path, failures: &[RunFailure]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["rolloff", "vmod_snu", "run", "seed", "error"])?;
    for f in failures {
        w.write_record([
            fmt_f64(f.rolloff),
            fmt_f64(f.vmod),
            f.run.to_string(),
            f.seed.to_string(),
            f.error.clone(),
        ])?;
    }
    finish(w, path)
}

pub fn write_calibration_csv(path: &Path, cals: &[CalibrationRecord]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "rolloff",
        "n_total_raw",
        "n_det_raw",
        "n0_raw",
        "n_det_snu",
        "n_symbols",
    ])?;
    for c in cals {
        w.write_record([
            fmt_f64(c.rolloff_used),
            fmt_f64(c.n_total),
            fmt_f64(c.n_det),
            fmt_f64(c.n0),
            fmt_f64(c.n_det_snu()),
            c.n_symbols.to_string(),
        ])?;
    }
    finish(w, path)
}

/// Frequency and level in dB relative to the pilots.
pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["frequency_hz", "power_db"])?;
    for (f, db) in spectrum.freqs.iter().zip(spectrum.to_db()) {
        w.write_record([fmt_f64(*f), fmt_f64(db)])?;
    }
    finish(w, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub status: &'a str,
    pub config: &'a C,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
    pub elapsed_s: f64,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'a str, status: &'a str, config: &'a C) -> Self {
        Manifest {
            tool: "cvqkd",
            version: env!("CARGO_PKG_VERSION"),
            command,
            status,
            config,
            outputs: Vec::new(),
            details: None,
            elapsed_s: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::Quadrature;

    fn row(rolloff: f64, vmod: f64, quadrature: Quadrature) -> PointSummary {
        PointSummary {
            rolloff,
            vmod,
            quadrature,
            xi_mean: 0.0123456789012345,
            xi_sem: 1e-3,
            vb_mean: 2.5,
            n_runs: 2,
            n_symbols: 65000,
            n0_raw: 1.5e-9,
            ndet_raw: 1e-10,
            seed_base: 7,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_summary_csv(&p, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{}\n", SUMMARY_HEADER.join(",")));
    }

    #[test]
    fn one_row_matches_the_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_summary_csv(&p, &[row(0.2, 4.0, Quadrature::Q)]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), SUMMARY_HEADER.len());
        assert_eq!(fields[2], "Q");
        assert_eq!(fields[3], "1.234567890123e-2");
        assert_eq!(fields[3].parse::<f64>().unwrap(), 0.01234567890123);
    }

    #[test]
    fn rows_come_out_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = [
            row(0.3, 2.0, Quadrature::I),
            row(0.1, 4.0, Quadrature::Q),
            row(0.1, 4.0, Quadrature::I),
            row(0.1, 2.0, Quadrature::Q),
        ];
        write_summary_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let keys: Vec<String> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(
            keys,
            [
                "1.000000000000e-1,2.000000000000e0,Q",
                "1.000000000000e-1,4.000000000000e0,I",
                "1.000000000000e-1,4.000000000000e0,Q",
                "3.000000000000e-1,2.000000000000e0,I",
            ]
        );
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_summary_csv(&blocker.join("s.csv"), &[]).unwrap_err();
        assert!(format!("{err:#}").contains("file"));
    }
}
