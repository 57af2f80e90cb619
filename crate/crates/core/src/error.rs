use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two or more sources share the same direction.
    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    /// The scenario is inconsistent with the array (e.g. too many sources).
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// Partition order outside `2 <= n <= floor(N/P)`.
    #[error(
        "invalid partition order n={order} for N={sensors}, P={sources}: valid range is {range}"
    )]
    Partition {
        sensors: usize,
        sources: usize,
        order: usize,
        range: String,
    },

    #[error("index {index} out of range 1..={max} for {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    /// A matrix that must have full rank does not, at the configured tolerance.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// The requested operator does not exist for this (N, P).
    #[error("not applicable: {0}")]
    Applicability(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid method identifier `{0}`")]
    InvalidMethod(String),

    /// Pearson correlation with a constant vector.
    #[error("undefined correlation: spectrum `{0}` has zero variance")]
    UndefinedCorrelation(String),

    #[error("trial {trial} failed: {source}")]
    TrialFailed {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than by the inputs'
    /// shape or validity.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::IllConditioned(_) | Error::Numerical(_) | Error::UndefinedCorrelation(_) => true,
            Error::TrialFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
