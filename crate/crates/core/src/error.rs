use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(&'static str),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("pilot at {freq} Hz falls inside the quantum band [{band_lo}, {band_hi}] Hz")]
    PilotInBand { freq: f64, band_lo: f64, band_hi: f64 },

    #[error("pilot SNR {snr_db:.1} dB is below the 10 dB floor")]
    LowSnr { snr_db: f64 },

    #[error("timing search ambiguous: peak only {margin_db:.2} dB above runner-up")]
    TimingAmbiguous { margin_db: f64 },

    #[error("root search did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("shot-noise unit is not positive (n0 = {n0:e})")]
    NonPositiveN0 { n0: f64 },

    #[error("calibration was recorded for a different receiver chain")]
    ConfigMismatch,

    #[error("insufficient data: need at least {needed} samples, got {found}")]
    InsufficientData { needed: usize, found: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
