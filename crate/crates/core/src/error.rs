use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pole at {0}")]
    Pole(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error("accuracy loss: {0}")]
    AccuracyLoss(String),
    #[error("truncation too short: {0}")]
    InsufficientTruncation(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("value too close to a zero: {0}")]
    NearZero(String),
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("degenerate notch: {0}")]
    DegenerateRegion(String),
    #[error("no shift found: {0}")]
    ShiftNotFound(String),
    #[error("zero list does not cover {0}")]
    Coverage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
