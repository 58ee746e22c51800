use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {n} points cannot support {k} components")]
    InsufficientData { n: usize, k: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical underflow: zero total density at point {0}")]
    NumericalUnderflow(usize),

    #[error("invalid assignment: point {index} has label {label}, expected < {k}")]
    InvalidAssignment { index: usize, label: usize, k: usize },

    #[error("no value supplied for component count k={0}")]
    MissingComponentCount(usize),

    #[error("component count k={k} is outside the candidate set {k_min}..={k_max}")]
    InvalidCandidate { k: usize, k_min: usize, k_max: usize },

    #[error("t={t} is too early for a window of width {window} (need t >= {needed})")]
    WindowUnderflow { t: usize, window: usize, needed: usize },

    #[error("false alarm rate undefined: no eligible time points outside the transition")]
    UndefinedFar,

    #[error("time index {t} is outside 1..={max}")]
    InvalidTime { t: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("at t={t}: {source}")]
    AtTime {
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_time(t: usize, source: Error) -> Self {
        Error::AtTime { t, source: Box::new(source) }
    }
}
