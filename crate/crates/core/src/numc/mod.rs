//! Dense complex matrix kernel: arithmetic, inversion, exponential, branch-controlled
//! logarithm and idempotent splitting.

mod expm;
mod logm;
mod matrix;
mod spectral;
mod split;

pub use expm::mat_expm;
pub use logm::{
    auto_branch, auto_branch_for, mat_logm, mat_logm_with, BranchAngle, DEFAULT_CUT_TOLERANCE,
};
pub use matrix::{mat_inv, CMatrix, DEFAULT_SINGULAR_FLOOR};
pub use spectral::{eigenvalues, min_singular_value, singular_values, Schur};
pub use split::{idempotent_split, IdempotentSplit, CLUSTER_MARGIN};

pub(crate) use matrix::c;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (smallest singular value estimate {sigma_min:e})")]
    SingularMatrix { sigma_min: f64 },
    #[error("eigenvalue {eigenvalue:?} lies on the branch cut for theta = {theta}")]
    EigenvalueOnBranchCut { eigenvalue: [f64; 2], theta: f64 },
    #[error("matrix is not idempotent (‖a² − a‖_F = {defect:e})")]
    NotIdempotent { defect: f64 },
    #[error("ill-conditioned idempotent split: {0}")]
    IllConditionedSplit(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

/// Numerical tolerances shared by every pipeline.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Bound for quantities that are exact up to rounding.
    pub exact: f64,
    /// Bound for residuals carrying discretization error.
    pub resid: f64,
    /// Relative singular-value floor.
    pub singular_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-10,
            resid: 1e-6,
            singular_floor: DEFAULT_SINGULAR_FLOOR,
        }
    }
}
