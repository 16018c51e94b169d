use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left} vs {right} modes per dimension")]
    GridMismatch { left: usize, right: usize },
    #[error("field is not Hermitian symmetric (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("exponent {value} outside admissible range {range}")]
    ExponentOutOfRange { value: f64, range: &'static str },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time {t} does not follow previous sample {previous}")]
    NonMonotoneTime { previous: f64, t: f64 },
    #[error("need at least {needed} nonempty shells in range, found {found}")]
    TooFewShells { needed: usize, found: usize },
    #[error("wave vector {k:?} outside the resolved box")]
    ModeOutOfRange { k: [i64; 3] },
    #[error("field has modes outside the {band} band")]
    SupportViolation { band: &'static str },
    #[error("numerical blowup at t = {time} (step {step}): {reason}")]
    Blowup {
        time: f64,
        step: u64,
        reason: String,
    },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
