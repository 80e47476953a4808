//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction of arrival {0} deg must lie strictly between 0 and 180")]
    DoaOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no active sensors on the grid")]
    NoActiveSensors,

    #[error("correlation lag {0} has no observed entries; the active array is not fully augmentable")]
    MissingLag(usize),

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("matrix is not Hermitian within tolerance (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("all weight groups fell below the sparsity threshold; support is empty")]
    EmptySupport,

    #[error(
        "enumeration over {required} supports exceeds the budget of {budget}; \
         prefix sensors to shrink the search or raise the budget"
    )]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
