use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("infeasible simplex floor: eps*d = {0} > 1")]
    InfeasibleFloor(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("not a probability vector: {0}")]
    NotAProbVector(String),

    #[error("not a pair measure: {0}")]
    NotAPairMeasure(String),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("rejection sampling budget ({budget}) exhausted for {space}")]
    RejectionBudgetExhausted { space: String, budget: usize },

    #[error("type lattice size {count} exceeds cap {cap} (d={d}, n={n})")]
    LatticeCapExceeded {
        d: usize,
        n: usize,
        count: u128,
        cap: u128,
    },

    #[error(
        "no parameter with finite rate value found for the observation \
         (rate-function domain assumption violated): {0}"
    )]
    EmptyRateDomain(String),

    #[error("ambiguity set is empty at the observed point: {0}")]
    EmptyAmbiguitySet(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("input parse error at line {line}: {message}")]
    InputParse { line: u64, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }

    /// True for errors caused by a bad configuration or malformed input
    /// rather than by a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InputParse { .. }
                | Error::InvalidArgument(_)
                | Error::InfeasibleFloor(_)
                | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
