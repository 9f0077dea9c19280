use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("band radius {radius} exceeds the Nyquist limit {nyquist}")]
    AboveNyquist { radius: f64, nyquist: f64 },
    #[error("field is not band limited to radius {radius}: out-of-band energy fraction {fraction:e}")]
    NotBandLimited { radius: f64, fraction: f64 },
    #[error("field carries no band certificate")]
    Uncertified,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("insufficient resolution: spacing {spacing} but at most {required} is needed")]
    InsufficientResolution { spacing: f64, required: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
