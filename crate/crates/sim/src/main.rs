use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cvqkd_core::link::{calibrate, Transmission};
use cvqkd_core::transmitter::{band_edges, pilot_referenced_spectrum};
use cvqkd_sim::config::FULL_SCALE_RUNS;
use cvqkd_sim::output::{self, Manifest};
use cvqkd_sim::seeds::calibration_seed;
use cvqkd_sim::{run_sweep, selftest, SweepConfig};
use serde_json::json;

/// Frequency points of the displayed spectrum.
const SPECTRUM_NFFT: usize = 5000;

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "CV-QKD link simulator: roll-off and modulation sweeps of the excess noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over roll-off and modulation variance.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Runs per grid point.
        #[arg(long)]
        runs: Option<usize>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// 305 runs per point.
        #[arg(long, conflicts_with = "runs")]
        full_scale: bool,
    },
    /// Pilot-referenced spectrum of the transmitter drive.
    Spectrum {
        #[arg(long, default_value_t = 0.2)]
        rolloff: f64,
        #[arg(long, default_value = "spectrum.csv")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Shot-noise-unit calibration for one roll-off.
    Calibrate {
        #[arg(long, default_value_t = 0.2)]
        rolloff: f64,
        #[arg(long, default_value = "calibration.csv")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Quick invariant checks.
    Selftest,
}

/// Failure with its own JSON summary already assembled.
struct Reported(serde_json::Value);

fn load(config: Option<&Path>, seed: Option<u64>) -> anyhow::Result<SweepConfig> {
    let mut cfg = match config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn sweep(cfg: SweepConfig, out: &Path) -> anyhow::Result<Result<(), Reported>> {
    cfg.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let result = run_sweep(&cfg, &|msg| eprintln!("{msg}"))?;
    let files = [
        ("summary.csv", "summary"),
        ("runs.csv", "runs"),
        ("calibration.csv", "calibration"),
        ("failures.csv", "failures"),
    ];
    output::write_summary_csv(&out.join(files[0].0), &result.summary)?;
    output::write_runs_csv(&out.join(files[1].0), &result.runs)?;
    output::write_calibration_csv(&out.join(files[2].0), &result.calibrations)?;
    output::write_failures_csv(&out.join(files[3].0), &result.failures)?;
    let status = if result.failures.is_empty() { "ok" } else { "partial" };
    let mut manifest = Manifest::new("sweep", status, &cfg);
    manifest.outputs = files.iter().map(|f| f.0.to_string()).collect();
    let mean_run_s = result.runs.iter().map(|r| r.wall_time_s).sum::<f64>() / result.runs.len().max(1) as f64;
    manifest.details = Some(json!({
        "calibration_seed": calibration_seed(cfg.master_seed),
        "runs_ok": result.runs.len(),
        "runs_failed": result.failures.len(),
        "failed_seeds": result.failures.iter().map(|f| f.seed).collect::<Vec<_>>(),
        "mean_run_wall_time_s": mean_run_s,
    }));
    manifest.elapsed_s = start.elapsed().as_secs_f64();
    output::write_json(&out.join("manifest.json"), &manifest)?;
    if result.failures.is_empty() {
        Ok(Ok(()))
    } else {
        Ok(Err(Reported(json!({
            "status": "partial",
            "command": "sweep",
            "error": format!("{} of {} runs failed", result.failures.len(), result.failures.len() + result.runs.len()),
            "failures": result.failures,
        }))))
    }
}

fn spectrum(cfg: SweepConfig, rolloff: f64, out: &Path) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut cfg = cfg;
    cfg.rolloffs = vec![rolloff];
    cfg.validate()?;
    let link = cfg.link_for(rolloff);
    let tx = Transmission::new(&link, cfg.master_seed)?;
    let spec = pilot_referenced_spectrum(&tx.rf, &link.pilots, link.symbol_rate, SPECTRUM_NFFT)?;
    output::write_spectrum_csv(out, &spec)?;
    let (lo, hi) = band_edges(&spec, link.if_freq, 30.0);
    let mut manifest = Manifest::new("spectrum", "ok", &cfg);
    manifest.outputs = vec![out.display().to_string()];
    manifest.details = Some(json!({
        "rolloff": rolloff,
        "nfft": SPECTRUM_NFFT,
        "resolution_hz": spec.resolution(),
        "band_edges_30db_hz": [lo, hi],
        "reference": "pilot tone power",
    }));
    manifest.elapsed_s = start.elapsed().as_secs_f64();
    output::write_json(&manifest_path(out), &manifest)
}

fn calibration(cfg: SweepConfig, rolloff: f64, out: &Path) -> anyhow::Result<()> {
    let start = Instant::now();
    let mut cfg = cfg;
    cfg.rolloffs = vec![rolloff];
    cfg.validate()?;
    let cal = calibrate(&cfg.link_for(rolloff), calibration_seed(cfg.master_seed))?;
    output::write_calibration_csv(out, std::slice::from_ref(&cal))?;
    let mut manifest = Manifest::new("calibrate", "ok", &cfg);
    manifest.outputs = vec![out.display().to_string()];
    manifest.details = Some(json!({ "calibration": cal, "calibration_seed": calibration_seed(cfg.master_seed) }));
    manifest.elapsed_s = start.elapsed().as_secs_f64();
    output::write_json(&manifest_path(out), &manifest)
}

fn run(cli: Cli) -> anyhow::Result<Result<(), Reported>> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            runs,
            seed,
            full_scale,
        } => {
            let mut cfg = load(config.as_deref(), seed)?;
            if let Some(r) = runs {
                cfg.runs_per_point = r;
            }
            if full_scale {
                cfg.runs_per_point = FULL_SCALE_RUNS;
            }
            sweep(cfg, &out)
        }
        Command::Spectrum {
            rolloff,
            out,
            config,
            seed,
        } => spectrum(load(config.as_deref(), seed)?, rolloff, &out).map(Ok),
        Command::Calibrate {
            rolloff,
            out,
            config,
            seed,
        } => calibration(load(config.as_deref(), seed)?, rolloff, &out).map(Ok),
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!("{} {:<32} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(Ok(()))
            } else {
                Ok(Err(Reported(json!({
                    "status": "error",
                    "command": "selftest",
                    "error": "invariant checks failed",
                    "failed": checks.iter().filter(|c| !c.passed).collect::<Vec<_>>(),
                }))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match &cli.command {
        Command::Sweep { .. } => "sweep",
        Command::Spectrum { .. } => "spectrum",
        Command::Calibrate { .. } => "calibrate",
        Command::Selftest => "selftest",
    };
    let summary = match run(cli) {
        Ok(Ok(())) => return ExitCode::SUCCESS,
        Ok(Err(Reported(v))) => v,
        Err(e) => json!({
            "status": "error",
            "command": command,
            "error": e.to_string(),
            "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
        }),
    };
    eprintln!("{}", serde_json::to_string(&summary).unwrap_or_else(|_| "{\"status\":\"error\"}".into()));
    ExitCode::FAILURE
}
