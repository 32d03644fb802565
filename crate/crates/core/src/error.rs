use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prior not normalized: entries sum to {sum}")]
    PriorNotNormalized { sum: f64 },

    #[error("prior has a negative entry {value}")]
    NegativePrior { value: f64 },

    #[error("incomplete table: {0}")]
    IncompleteTable(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unsupported hierarchy level `{0}` (expected 1, 1+AB or 2)")]
    UnsupportedLevel(String),

    #[error("SDP solver did not converge after {iterations} iterations (best bound {best_bound}, gap {gap:e})")]
    SolverFailed {
        iterations: usize,
        best_bound: f64,
        gap: f64,
    },

    #[error("setting (xA={0}, xB={1}) was never observed")]
    UnobservedSetting(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input data, as opposed to numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::SolverFailed { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
