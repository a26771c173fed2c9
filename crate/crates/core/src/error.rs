use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("global sensitivity infinite: population has no range bounds")]
    Unbounded,

    #[error("operation requires an odd number of records, got {0}")]
    EvenSize(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("amplified delta not a valid probability: {0}")]
    InvalidAmplifiedDelta(f64),

    #[error("combinatorial guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("populations are not bounded neighbors: {0}")]
    NotNeighbors(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
