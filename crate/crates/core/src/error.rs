use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("amplitudes are not normalized: squared norm {norm_sq} is outside 1 ± {tolerance}")]
    NotNormalized { norm_sq: f64, tolerance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not unitary: max |U†U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("invalid basis labels: {0}")]
    InvalidLabels(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
