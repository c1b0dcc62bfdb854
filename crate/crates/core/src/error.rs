//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular collocation system at xi = {xi:?} (condition estimate {condition:.3e})")]
    Singular { xi: Vec<f64>, condition: f64 },

    #[error("surface symbol vanishes at xi = {xi:?} (|rho| = {modulus:.3e})")]
    RhoVanishes { xi: Vec<f64>, modulus: f64 },

    #[error("vertical resolution insufficient at |xi| = {xi_norm}; use M >= {suggested}")]
    Resolution { xi_norm: f64, suggested: usize },

    #[error("incompatible data: {0}")]
    Incompatible(String),

    #[error("iteration does not contract: {0}")]
    NonContraction(String),

    #[error("amplitude outside admissible range: {0}")]
    Amplitude(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
