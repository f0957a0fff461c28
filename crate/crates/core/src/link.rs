//! One complete back-to-back link: per-chain calibration, the attenuator
//! loop that sets V_A, and a data frame through lasers, detector and
//! receiver to an excess-noise estimate.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{attenuate, solve_attenuation_for_vmod, wiener_phase, AttenuationFit, ChannelParams};
use crate::dsp::SampledSignal;
use crate::frontend::{electronic_measurement, heterodyne_detect, vacuum_measurement, DetectorParams, LoConfig};
use crate::metrics::{calibrate_snu, estimate_vb, normalize_to_snu, CalibrationRecord, ExcessNoiseResult, VbEstimate};
use crate::receiver::{
    demodulate_spectrum, estimate_freq_offset, estimate_phase, process_noise_record, ChainConfig, PhaseEstimate,
    ReceivedSpectrum,
    RecoveredFrame,
};
use crate::rng::{derive_seed, rng_from_seed, stream, uniform};
use crate::transmitter::{build_ssb_rf, generate_symbols, modulate_optical, shape_pulse, LaserModel, PilotConfig};
use crate::{Error, Result};

/// How the LO detuning of a run is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum LoOffset {
    /// Uniform in `[-max, max]` Hz, drawn per run.
    Random { max: f64 },
    Fixed { value: f64 },
}

/// Which pilot drives the phase estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PhaseReference {
    /// The residual-carrier pilot.
    Carrier,
    /// The second pilot (100 MHz by default).
    Second,
    /// Mean of both.
    Average,
}

/// Switches for the random impairments of a data frame. Calibration always
/// uses the detector as configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Impairments {
    pub laser_phase_noise: bool,
    pub detector_noise: bool,
    pub lo_offset: bool,
}

impl Default for Impairments {
    fn default() -> Self {
        Impairments {
            laser_phase_noise: true,
            detector_noise: true,
            lo_offset: true,
        }
    }
}

impl Impairments {
    pub fn none() -> Self {
        Impairments {
            laser_phase_noise: false,
            detector_noise: false,
            lo_offset: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LinkConfig {
    pub symbol_rate: f64,
    pub samples_per_symbol: usize,
    pub n_symbols: usize,
    pub roll_off: f64,
    pub rrc_span: usize,
    pub if_freq: f64,
    pub pilots: PilotConfig,
    pub pilot_cutoff: f64,
    pub phase_reference: PhaseReference,
    pub tx_linewidth: f64,
    pub tx_power: f64,
    pub lo_linewidth: f64,
    pub lo_power: f64,
    pub lo_offset: LoOffset,
    pub detector: DetectorParams,
    pub channel: ChannelParams,
    pub impairments: Impairments,
    /// Frame-length records pooled into one calibration.
    pub calibration_frames: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            symbol_rate: 50e6,
            samples_per_symbol: 20,
            n_symbols: 1 << 15,
            roll_off: 0.2,
            rrc_span: 20,
            if_freq: 250e6,
            pilots: PilotConfig::default(),
            pilot_cutoff: 50e6,
            phase_reference: PhaseReference::Second,
            tx_linewidth: 1e3,
            tx_power: 1.0,
            lo_linewidth: 1e3,
            lo_power: 1.0,
            lo_offset: LoOffset::Random { max: 1e6 },
            detector: DetectorParams::default(),
            channel: ChannelParams::default(),
            impairments: Impairments::default(),
            calibration_frames: 8,
        }
    }
}

impl LinkConfig {
    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    pub fn n_samples(&self) -> usize {
        self.n_symbols * self.samples_per_symbol
    }

    pub fn chain(&self) -> ChainConfig {
        ChainConfig {
            roll_off: self.roll_off,
            span: self.rrc_span,
            samples_per_symbol: self.samples_per_symbol,
            symbol_rate: self.symbol_rate,
            if_freq: self.if_freq,
            pilot_cutoff: self.pilot_cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return Err(Error::param("symbol_rate", "must be positive"));
        }
        if self.n_symbols < 4 * self.rrc_span {
            return Err(Error::param("n_symbols", "frame too short for the filter span"));
        }
        if self.calibration_frames == 0 {
            return Err(Error::param("calibration_frames", "must be at least 1"));
        }
        let fs = self.sample_rate();
        if !(self.pilot_cutoff > 0.0 && self.pilot_cutoff < fs / 2.0) {
            return Err(Error::param("pilot_cutoff", "must lie in (0, fs/2)"));
        }
        let max_offset = match self.lo_offset {
            LoOffset::Random { max } => max,
            LoOffset::Fixed { value } => libm::fabs(value),
        };
        if !(max_offset >= 0.0 && max_offset < self.pilot_cutoff) {
            return Err(Error::param("lo_offset", "must stay inside the pilot filter"));
        }
        let rrc = self.chain().rrc()?;
        let half = rrc.half_bandwidth(self.symbol_rate);
        let (lo, hi) = (self.if_freq - half - max_offset, self.if_freq + half + max_offset);
        if !(lo > 0.0 && hi < fs / 2.0) {
            return Err(Error::param("if_freq", "quantum band must stay inside (0, fs/2)"));
        }
        if self.pilots.enabled {
            self.pilots.validate(self.if_freq - half, self.if_freq + half, fs)?;
        } else {
            return Err(Error::param("pilots", "the receiver needs its pilots"));
        }
        for (name, lw) in [("tx_linewidth", self.tx_linewidth), ("lo_linewidth", self.lo_linewidth)] {
            if !(lw >= 0.0 && lw.is_finite()) {
                return Err(Error::param(name, "must be finite and non-negative"));
            }
        }
        for (name, p) in [("tx_power", self.tx_power), ("lo_power", self.lo_power)] {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        self.detector.validate()?;
        self.channel.validate()
    }

    fn lo(&self, linewidth: f64, offset: f64, seed: u64) -> LoConfig {
        LoConfig {
            laser: LaserModel {
                linewidth,
                power: self.lo_power,
                seed,
            },
            frequency_offset: offset,
        }
    }
}

/// Measures the shot-noise unit for the configured chain: vacuum and
/// electronic records of `calibration_frames` frames each, pooled.
pub fn calibrate(config: &LinkConfig, seed: u64) -> Result<CalibrationRecord> {
    config.validate()?;
    let chain = config.chain();
    let fs = config.sample_rate();
    let n = config.n_samples();
    let lo = config.lo(0.0, 0.0, derive_seed(seed, stream::LO_LASER));
    let mut vacuum = Vec::new();
    let mut electronic = Vec::new();
    for frame in 0..config.calibration_frames as u64 {
        let vac_seed = derive_seed(derive_seed(seed, stream::VACUUM), frame);
        let ele_seed = derive_seed(derive_seed(seed, stream::ELECTRONIC), frame);
        let vac = vacuum_measurement(&lo, &config.detector, n, fs, vac_seed)?;
        vacuum.extend(process_noise_record(&vac, &chain)?);
        let ele = electronic_measurement(&config.detector, n, fs, ele_seed)?;
        electronic.extend(process_noise_record(&ele, &chain)?);
    }
    calibrate_snu(&vacuum, &electronic, &chain)
}

/// Pilot-aided recovery of one received record.
pub fn recover(config: &LinkConfig, rx: &SampledSignal, known: &[Complex64]) -> Result<(RecoveredFrame, PhaseEstimate)> {
    let spectrum = ReceivedSpectrum::new(rx)?;
    let estimate = |freq: f64| -> Result<PhaseEstimate> {
        let trace = spectrum.pilot(freq, config.pilot_cutoff)?;
        let f = estimate_freq_offset(&trace)?;
        estimate_phase(&trace, f)
    };
    let phase = match config.phase_reference {
        PhaseReference::Carrier => estimate(config.pilots.carrier_pilot_freq)?,
        PhaseReference::Second => estimate(config.pilots.second_pilot_freq)?,
        PhaseReference::Average => {
            estimate(config.pilots.carrier_pilot_freq)?.average(&estimate(config.pilots.second_pilot_freq)?)?
        }
    };
    let frame = demodulate_spectrum(&spectrum, &phase, &config.chain(), known)?;
    Ok((frame, phase))
}

/// Alice's side of one run: the symbol frame and its RF drive.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub symbols: Vec<Complex64>,
    pub rf: SampledSignal,
    seed: u64,
}

/// What a data frame produced besides the excess noise.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameOutcome {
    pub result: ExcessNoiseResult,
    pub attenuation: AttenuationFit,
    pub lo_offset: f64,
    pub freq_offset_hat: f64,
    pub timing_phase: usize,
    pub mean_removed: bool,
}

impl Transmission {
    pub fn new(config: &LinkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let rrc = config.chain().rrc()?;
        let frame = generate_symbols(config.n_symbols, 1.0, derive_seed(seed, stream::SYMBOLS))?;
        let baseband = shape_pulse(&frame, &rrc, config.symbol_rate)?;
        let rf = build_ssb_rf(&baseband, config.if_freq, rrc.half_bandwidth(config.symbol_rate), &config.pilots)?;
        Ok(Transmission {
            symbols: frame.symbols,
            rf,
            seed,
        })
    }

    /// Noiseless probe at attenuator gain `gain`: no phase noise, no LO
    /// detuning, no detector noise, same receiver. Returns the variance per
    /// quadrature in SNU.
    pub fn probe(&self, config: &LinkConfig, cal: &CalibrationRecord, gain: f64) -> Result<(f64, f64)> {
        let laser = LaserModel {
            linewidth: 0.0,
            power: config.tx_power,
            seed: 0,
        };
        let field = modulate_optical(&self.rf, &laser, &vec![0.0; self.rf.len()])?;
        let field = attenuate(&field, gain)?;
        let lo = config.lo(0.0, 0.0, 0);
        let rx = heterodyne_detect(&field, &lo, &config.detector.noiseless(), 0)?;
        let (frame, _) = recover(config, &rx, &self.symbols)?;
        let vb = estimate_vb(&normalize_to_snu(&frame, cal)?)?;
        Ok((vb.vb_i, vb.vb_q))
    }

    /// Attenuator gain that puts the probe at `target_va` SNU.
    pub fn set_modulation(&self, config: &LinkConfig, cal: &CalibrationRecord, target_va: f64) -> Result<AttenuationFit> {
        solve_attenuation_for_vmod(target_va, cal, |g| self.probe(config, cal, g))
    }

    /// LO detuning used by the data frame.
    pub fn lo_offset(&self, config: &LinkConfig) -> f64 {
        if !config.impairments.lo_offset {
            return 0.0;
        }
        match config.lo_offset {
            LoOffset::Fixed { value } => value,
            LoOffset::Random { max } => {
                let mut rng = rng_from_seed(derive_seed(self.seed, stream::LO_OFFSET));
                (2.0 * uniform(&mut rng) - 1.0) * max
            }
        }
    }

    /// Sends the frame through the lasers, channel and detector at `gain`
    /// and returns the photocurrent.
    pub fn detect(&self, config: &LinkConfig, gain: f64) -> Result<SampledSignal> {
        let imp = config.impairments;
        let fs = config.sample_rate();
        let n = self.rf.len();
        let tx_lw = if imp.laser_phase_noise { config.tx_linewidth } else { 0.0 };
        let lo_lw = if imp.laser_phase_noise { config.lo_linewidth } else { 0.0 };
        let tx_seed = derive_seed(self.seed, stream::TX_LASER);
        let laser = LaserModel {
            linewidth: tx_lw,
            power: config.tx_power,
            seed: tx_seed,
        };
        let path = wiener_phase(n, tx_lw, fs, tx_seed)?;
        let field = modulate_optical(&self.rf, &laser, &path.phases)?;
        let field = attenuate(&field, gain)?;
        let field = attenuate(&field, config.channel.transmittance)?;
        let lo = config.lo(lo_lw, self.lo_offset(config), derive_seed(self.seed, stream::LO_LASER));
        let det: DetectorParams = if imp.detector_noise {
            config.detector.clone()
        } else {
            config.detector.noiseless()
        };
        heterodyne_detect(&field, &lo, &det, derive_seed(self.seed, stream::DETECTOR))
    }

    /// Data frame at the gain found by `fit`, through to excess noise.
    pub fn measure(&self, config: &LinkConfig, cal: &CalibrationRecord, fit: &AttenuationFit) -> Result<FrameOutcome> {
        let rx = self.detect(config, fit.gain)?;
        let (frame, phase) = recover(config, &rx, &self.symbols)?;
        let snu = normalize_to_snu(&frame, cal)?;
        let vb: VbEstimate = estimate_vb(&snu)?;
        let result = ExcessNoiseResult::evaluate(
            &vb,
            fit.va_i,
            fit.va_q,
            config.channel.transmittance,
            config.detector.eta,
            snu.len(),
        )?;
        Ok(FrameOutcome {
            result,
            attenuation: *fit,
            lo_offset: self.lo_offset(config),
            freq_offset_hat: phase.freq_offset_hat,
            timing_phase: frame.timing_phase,
            mean_removed: vb.mean_removed_i || vb.mean_removed_q,
        })
    }
}

/// One data frame at modulation variance `target_va` SNU using an existing
/// calibration.
pub fn run_frame(config: &LinkConfig, target_va: f64, cal: &CalibrationRecord, seed: u64) -> Result<FrameOutcome> {
    if cal.chain != config.chain() {
        return Err(Error::ConfigMismatch);
    }
    let tx = Transmission::new(config, seed)?;
    let fit = tx.set_modulation(config, cal, target_va)?;
    tx.measure(config, cal, &fit)
}

/// Calibrate, set the attenuator, transmit, detect, recover and evaluate.
pub fn run_single(config: &LinkConfig, target_va: f64, seed: u64) -> Result<(CalibrationRecord, FrameOutcome)> {
    let cal = calibrate(config, derive_seed(seed, stream::CALIBRATION))?;
    let outcome = run_frame(config, target_va, &cal, seed)?;
    Ok((cal, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};

    fn small() -> LinkConfig {
        LinkConfig {
            n_symbols: 1 << 14,
            calibration_frames: 2,
            ..LinkConfig::default()
        }
    }

    #[test]
    fn calibration_reads_one_snu_for_vacuum() {
        let cfg = small();
        let cal = calibrate(&cfg, 11).unwrap();
        assert!(cal.n0 > 0.0);
        let ratio = cal.n_det / cal.n_total;
        let expected = cfg.detector.thermal_psd() / (cfg.detector.thermal_psd() + cfg.detector.shot_psd(cfg.lo_power));
        assert!((ratio / expected - 1.0).abs() < 0.05, "{ratio} vs {expected}");
    }

    #[test]
    fn probe_variance_is_linear_in_gain() {
        let cfg = small();
        let cal = calibrate(&cfg, 3).unwrap();
        let tx = Transmission::new(&cfg, 5).unwrap();
        let gains = [0.2e-3, 0.5e-3, 1e-3, 2e-3, 4e-3];
        let va: Vec<f64> = gains
            .iter()
            .map(|&g| {
                let (i, q) = tx.probe(&cfg, &cal, g).unwrap();
                0.5 * (i + q)
            })
            .collect();
        let (mx, my) = (mean(&gains), mean(&va));
        let sxy: f64 = gains.iter().zip(&va).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = gains.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let ss_res: f64 = gains.iter().zip(&va).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
        let r2 = 1.0 - ss_res / (variance(&va) * (va.len() - 1) as f64);
        assert!(r2 > 0.999, "r2 {r2}");
    }

    #[test]
    fn attenuator_hits_the_target() {
        let cfg = small();
        let cal = calibrate(&cfg, 3).unwrap();
        let tx = Transmission::new(&cfg, 9).unwrap();
        let fit = tx.set_modulation(&cfg, &cal, 4.0).unwrap();
        assert!((fit.va() / 4.0 - 1.0).abs() < 2e-3, "{}", fit.va());
        assert!(fit.evaluations <= 4);
    }

    #[test]
    fn noiseless_frame_returns_the_probe() {
        let cfg = LinkConfig {
            impairments: Impairments::none(),
            ..small()
        };
        let (_, out) = run_single(&cfg, 4.0, 21).unwrap();
        let r = &out.result;
        assert!((r.vb_i / r.va_i - 1.0).abs() < 1e-4, "{r:?}");
        assert!((r.vb_q / r.va_q - 1.0).abs() < 1e-4);
        let closed = (1.0 - cfg.detector.eta / 2.0) * r.va_i - (1.0 + cfg.detector.eta) / 2.0;
        assert!((r.xi_i - closed).abs() < 1e-3);
    }

    #[test]
    fn full_frame_is_deterministic_and_sane() {
        let cfg = small();
        let cal = calibrate(&cfg, 1).unwrap();
        let a = run_frame(&cfg, 4.0, &cal, 77).unwrap();
        let b = run_frame(&cfg, 4.0, &cal, 77).unwrap();
        assert_eq!(a, b);
        assert!(a.lo_offset.abs() <= 1e6);
        assert!((a.freq_offset_hat + a.lo_offset).abs() < 5e3, "{} {}", a.freq_offset_hat, a.lo_offset);
        assert!(a.result.xi_i.is_finite() && a.result.xi_q.is_finite());
        assert!(a.result.vb_i > 1.0);
    }

    #[test]
    fn calibration_rejects_other_chains() {
        let cfg = small();
        let cal = calibrate(&cfg, 1).unwrap();
        let other = LinkConfig { roll_off: 0.3, ..cfg };
        assert_eq!(run_frame(&other, 4.0, &cal, 1), Err(Error::ConfigMismatch));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = LinkConfig {
            lo_offset: LoOffset::Fixed { value: 80e6 },
            ..small()
        };
        assert!(bad.validate().is_err());
        let bad = LinkConfig {
            calibration_frames: 0,
            ..small()
        };
        assert!(bad.validate().is_err());
        let bad = LinkConfig {
            if_freq: 480e6,
            ..small()
        };
        assert!(bad.validate().is_err());
        assert!(LinkConfig::default().validate().is_ok());
    }
}
