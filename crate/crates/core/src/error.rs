use thiserror::Error;

/// Errors raised across the simulation, detection and association stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time step {step} is outside the configured duration ({steps} steps)")]
    OutOfDuration { step: usize, steps: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no scatterer of the target survives filtering")]
    NoVisibleTarget,

    #[error("target at delay {delay_s:.3e} s is beyond the unambiguous range ({limit_s:.3e} s)")]
    RangeAmbiguity { delay_s: f64, limit_s: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("degenerate interval: knots {0} and {1} coincide")]
    DegenerateInterval(f64, f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
