use thiserror::Error;

/// Errors raised by the confidence-set library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{name} = {value} is outside its domain {domain}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate mixture: class means coincide under the covariance metric")]
    DegenerateMixture,

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    domain: &'static str,
    ok: bool,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            domain,
        })
    }
}

/// `epsilon` must lie in `(0, 1]`.
pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    check_range(
        "epsilon",
        epsilon,
        "(0, 1]",
        epsilon > 0.0 && epsilon <= 1.0,
    )
}
