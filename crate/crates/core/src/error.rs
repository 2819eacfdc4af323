use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is out of range: requires {bound}")]
    Domain { name: &'static str, value: f64, bound: &'static str },

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("Bessel zero j(nu={nu}, {index}) did not converge")]
    BesselZero { nu: f64, index: usize },

    #[error("ground-state iteration failed after {iterations} iterations: {reason}")]
    GroundState { iterations: usize, reason: String },

    #[error("shooting oracle failed: {0}")]
    Shooting(String),

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config: missing required key {0}")]
    MissingKey(&'static str),

    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
