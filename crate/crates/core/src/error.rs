use thiserror::Error;

/// Errors produced by the coexistence library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoexError {
    #[error("invalid prototype filter: {0}")]
    InvalidFilter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("subcarrier {subcarrier} is not in the {system} active set")]
    InactiveSubcarrier { subcarrier: i64, system: &'static str },

    #[error("window [{start}, {end}) lies outside the signal (0..{len})")]
    WindowOutOfBounds { start: i64, end: i64, len: usize },

    #[error("burst of {symbols} symbols leaves no interior measurement window")]
    BurstTooShort { symbols: usize },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:e}")]
    QuadratureNonConvergence { a: f64, b: f64, error: f64 },

    #[error("unsupported direction for this operation: {0}")]
    UnsupportedDirection(&'static str),

    #[error("config file {path}: {message}")]
    ConfigFile { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, CoexError>;
