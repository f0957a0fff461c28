use std::path::Path;

use anyhow::{bail, Context};
use cvqkd_core::link::LinkConfig;
use serde::{Deserialize, Serialize};

/// Runs per point used by `--full-scale`.
pub const FULL_SCALE_RUNS: usize = 305;

/// A (roll-off, modulation variance) grid with the link physics shared by
/// every point. `link.roll_off` and `link.n_symbols` are overwritten per
/// point from `rolloffs` and `symbols_per_run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub rolloffs: Vec<f64>,
    /// Target V_A values in SNU.
    pub vmods: Vec<f64>,
    pub runs_per_point: usize,
    pub symbols_per_run: usize,
    pub master_seed: u64,
    pub link: LinkConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            rolloffs: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            vmods: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            runs_per_point: 50,
            symbols_per_run: 1 << 15,
            master_seed: 20_240_601,
            link: LinkConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Link configuration for one roll-off.
    pub fn link_for(&self, rolloff: f64) -> LinkConfig {
        LinkConfig {
            roll_off: rolloff,
            n_symbols: self.symbols_per_run,
            ..self.link.clone()
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.rolloffs.is_empty() || self.vmods.is_empty() {
            bail!("rolloffs and vmods must be non-empty");
        }
        if self.runs_per_point < 2 {
            bail!("runs_per_point must be at least 2, got {}", self.runs_per_point);
        }
        if self.runs_per_point >= 1 << 24 {
            bail!("runs_per_point must be below 2^24");
        }
        for &b in &self.rolloffs {
            if !(0.0..=0.5).contains(&b) {
                bail!("roll-off {b} outside [0, 0.5]");
            }
        }
        for &v in &self.vmods {
            if !(v > 0.0 && v * 1e3 < (1u64 << 24) as f64) {
                bail!("vmod {v} outside (0, 16777) SNU");
            }
        }
        if has_duplicates(&self.rolloffs, 1e4) || has_duplicates(&self.vmods, 1e3) {
            bail!("rolloffs and vmods must be distinct after rounding to 1e-4 and 1e-3");
        }
        for &b in &self.rolloffs {
            self.link_for(b)
                .validate()
                .with_context(|| format!("link configuration at roll-off {b}"))?;
        }
        Ok(())
    }
}

fn has_duplicates(values: &[f64], scale: f64) -> bool {
    let mut keys: Vec<i64> = values.iter().map(|v| (v * scale).round() as i64).collect();
    keys.sort_unstable();
    keys.windows(2).any(|w| w[0] == w[1])
}
