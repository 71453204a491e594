use thiserror::Error;

/// Errors raised by the learning, ambiguity and transport routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid noise model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time index {k} is outside the history window [{first}, {last}]")]
    IndexOutOfWindow { k: usize, first: usize, last: usize },

    #[error("history window is empty")]
    EmptyWindow,

    #[error("degenerate mixture coefficients: |sum(alpha)| = {sum:e} is below the floor")]
    DegenerateCoefficients { sum: f64 },

    #[error("unidentifiable window: largest singular value {largest:e} does not exceed threshold {threshold:e}")]
    Unidentifiable { largest: f64, threshold: f64 },

    #[error("predictor set is not linearly independent on the probe set (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step {t}: {source}")]
    AtStep {
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn at_step(self, t: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep { t, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
