use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension d={0}: only integer dimensions d >= 3 are supported")]
    InvalidDimension(i64),

    #[error("invalid diffusion exponent {name}={value}: must be finite and > 1")]
    InvalidDiffusionExponent { name: &'static str, value: f64 },

    #[error("invalid Lebesgue exponent p={0}: must be >= 1")]
    InvalidExponent(f64),

    #[error("{what}={value} outside admissible range [{lo}, {hi})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid scale factor lambda={0}: must be > 0")]
    InvalidScale(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("positivity violated in cell {cell} (value {value:e}) at t={t}")]
    Positivity { cell: usize, value: f64, t: f64 },

    #[error("numerical failure ({what}); last valid time t={t_last}")]
    NumericalFailure { what: String, t_last: f64 },

    #[error("no zero crossing found before r_max={r_max}")]
    NoZero { r_max: f64 },

    #[error("profile support {support} exceeds grid radius {radius}")]
    Truncation { support: f64, radius: f64 },

    #[error("construction undefined: {0}")]
    ConstructionUndefined(String),

    #[error("missing constant: {0}")]
    MissingConstant(&'static str),

    #[error("invalid solver configuration: {0}")]
    InvalidSolver(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
