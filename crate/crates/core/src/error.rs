use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter point: {0}")]
    InvalidPoint(String),

    /// A value lies outside the domain of a map (e.g. `log` of a non-positive good).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A closed form would divide by (almost) zero or leave its region of validity.
    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
