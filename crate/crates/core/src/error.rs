use thiserror::Error;

use crate::words::GroupSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch: {left:?} vs {right:?}")]
    SpecMismatch { left: GroupSpec, right: GroupSpec },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("set is not grounded: {0}")]
    NotGrounded(String),

    #[error("{0} is not contained in the target set")]
    NotSubset(String),

    #[error("value missing for word {0}")]
    MissingValue(String),

    #[error("element is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("support word {0} lies outside E^-1 E")]
    SupportOutsideDomain(String),

    #[error("conjugacy class of {0} is not reachable from E^-1 E")]
    ClassNotCovered(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, allowed {allowed:.3e})")]
    NotPsd { min_eig: f64, allowed: f64 },

    #[error("operator norm {0:.6} exceeds 1")]
    NotContraction(f64),

    #[error("affine constraints are inconsistent (residual {0:.3e})")]
    InconsistentConstraints(f64),

    #[error("semidefinite program is infeasible")]
    Infeasible,

    #[error("semidefinite program is unbounded")]
    Unbounded,

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
