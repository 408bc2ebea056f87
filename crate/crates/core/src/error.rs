use thiserror::Error;

use crate::numc::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("function is singular at {point:?}")]
    SingularAtPoint { point: Vec<[f64; 2]> },
    #[error("projector path is not idempotent at s = {s} (defect {defect:e})")]
    NotIdempotentAlongPath { s: f64, defect: f64 },
    #[error("transport frame condition number {condition:e} exceeds {bound:e}")]
    TransportDiverged { condition: f64, bound: f64 },
    #[error("function is not real on the real slice (max imaginary part {imag:e})")]
    NotRealOnRealSlice { imag: f64 },
    #[error("function is not real symmetric (residual {residual:e})")]
    NotRealSymmetric { residual: f64 },
    #[error("rank mismatch: previous stage has rank {expected}, lifted projector has {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("pointwise rank is not constant on the grid (ranks {first} and {other})")]
    RankNotConstant { first: i64, other: i64 },
    #[error("seam discontinuity {residual:e} exceeds {tolerance:e}")]
    SeamDiscontinuity { residual: f64, tolerance: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("star relation violated (residual {residual:e})")]
    StarRelationViolated { residual: f64 },
    #[error("function becomes singular along the homotopy at t = {t}")]
    SingularAlongPath { t: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Schema(String),
    #[error("stage {k}: {source}")]
    Stage { k: usize, source: Box<Error> },
    #[error("grid point {index} {point:?}: {source}")]
    AtPoint {
        index: usize,
        point: Vec<[f64; 2]>,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, k: usize) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                k,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn at_point(self, index: usize, z: &[num_complex::Complex64]) -> Error {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint {
                index,
                point: crate::funcrep::point_pairs(z),
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with stage and point annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }
}
