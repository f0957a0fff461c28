//! Sweeps, configuration files, CSV and JSON artifacts for the `cvqkd`
//! command-line tool. The signal chain itself lives in `cvqkd-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod seeds;
pub mod selftest;
pub mod sweep;

pub use config::SweepConfig;
pub use sweep::{aggregate, run_sweep, PointSummary, Quadrature, RunFailure, RunRecord, SweepOutcome};
