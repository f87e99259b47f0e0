use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A weight, coefficient or state entry became non-finite.
    #[error("divergence: {0}")]
    Divergence(String),

    /// The operator norm handed to the fixed-point bound is not below one.
    #[error("contraction violated: operator norm {0} is not < 1")]
    ContractionViolation(f64),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A Monte Carlo repetition failed; carries the seed that reproduces it.
    #[error("run {run} (seed {seed}, arm {arm}) failed: {source}")]
    RunFailed {
        seed: u64,
        run: usize,
        arm: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors that mean the iteration itself blew up rather than
    /// being handed bad input.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence(_) | Error::NumericalBreakdown(_) => true,
            Error::RunFailed { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
