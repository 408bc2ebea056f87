//! Projector transport along straight-line contractions.
//!
//! For an idempotent-valued `p` and a point `x`, the frame `F` solving
//! `F′(s) = [Π′(s), Π(s)]·F(s)`, `F(0) = I`, with `Π(s) = p(s·x)`, satisfies
//! `F(s)·Π(0)·F(s)⁻¹ = Π(s)`. Composing with a constant split of `p(0)` trivializes `p`
//! over any domain that is star-shaped about the origin.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcrep::{
    point_key, ray_derivative, scale_point, ConjClosedGrid, DomainDescriptor, GridMatrixFunction,
    MatrixField, Point, PointKey, DEFAULT_FD_STEP,
};
use crate::numc::{c, idempotent_split, CMatrix, Tolerances};
use crate::ode::rk4_linear;

/// `H(x, s) = s·x`, which stays inside every domain of the chain (all are star-shaped
/// about 0, including the half domains).
#[derive(Debug, Clone, Copy)]
pub struct ContractionHomotopy {
    pub domain: DomainDescriptor,
}

impl ContractionHomotopy {
    pub fn contract_point(&self, x: &[Complex64], s: f64) -> Point {
        assert!((0.0..=1.0).contains(&s), "contraction parameter {s} outside [0, 1]");
        scale_point(x, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportConfig {
    pub steps: usize,
    pub fd_step: f64,
    /// Frames with `‖F‖_F·‖F⁻¹‖_F` above this are rejected.
    pub condition_bound: f64,
    pub tol: Tolerances,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            steps: 200,
            fd_step: DEFAULT_FD_STEP,
            condition_bound: 1e8,
            tol: Tolerances::default(),
        }
    }
}

impl TransportConfig {
    pub fn with_steps(steps: usize) -> Self {
        TransportConfig {
            steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 16 {
            return Err(Error::InvalidConfig(format!(
                "transport needs at least 16 steps (got {})",
                self.steps
            )));
        }
        if !(self.fd_step > 1e-9 && self.fd_step < 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "finite-difference step {} outside (1e-9, 1e-2)",
                self.fd_step
            )));
        }
        Ok(())
    }
}

/// Transport frame `F(1)` along `s ↦ p(s·x)`.
pub fn kato_transport<F: MatrixField + ?Sized>(
    p: &F,
    x: &[Complex64],
    cfg: &TransportConfig,
) -> Result<CMatrix> {
    cfg.validate()?;
    let (m, _) = p.dims();
    let generator = |s: f64| -> Result<CMatrix> {
        let pi = p.eval(&scale_point(x, s))?;
        let defect = (&(&pi * &pi) - &pi).norm_fro();
        if !(defect <= cfg.tol.resid) {
            return Err(Error::NotIdempotentAlongPath { s, defect });
        }
        let dpi = ray_derivative(p, x, s, cfg.fd_step)?;
        Ok(dpi.commutator(&pi))
    };
    let frame = rk4_linear(generator, CMatrix::identity(m), cfg.steps)?;
    let condition = frame.condition_fro().unwrap_or(f64::INFINITY);
    if !(condition <= cfg.condition_bound) {
        return Err(Error::TransportDiverged {
            condition,
            bound: cfg.condition_bound,
        });
    }
    Ok(frame)
}

/// Frames from [`trivialize_idempotent`].
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub frames: GridMatrixFunction,
    pub rank: usize,
    /// `max ‖V⁻¹·p·V − diag(I_rank, 0)‖_F` over the grid.
    pub residual: f64,
    /// `max |trace p(z) − rank|` over the grid.
    pub trace_deviation: f64,
}

/// `V(z) = kato_transport(p, z)·W` with `(W, rank)` the split of `p(0)`.
pub fn trivialize_idempotent<F: MatrixField + ?Sized>(
    p: &F,
    grid: &ConjClosedGrid,
    cfg: &TransportConfig,
) -> Result<TransportResult> {
    let mut cache = TransportCache::default();
    trivialize_with_cache(p, grid, cfg, &mut cache)
}

pub(crate) fn trivialize_with_cache<F: MatrixField + ?Sized>(
    p: &F,
    grid: &ConjClosedGrid,
    cfg: &TransportConfig,
    cache: &mut TransportCache,
) -> Result<TransportResult> {
    let origin = vec![c(0.0, 0.0); grid.domain().n];
    let split = idempotent_split(&p.eval(&origin)?, cfg.tol.resid)?;
    let transports = cache.frames(p, grid.points(), cfg)?;
    let values: Vec<CMatrix> = transports.iter().map(|f| f * &split.frame).collect();
    let samples = crate::funcrep::sample(p, grid)?;
    let residual = conjugation_residual(&values, &samples, split.rank)?;
    let trace_deviation = rank_trace_deviation(&samples, split.rank)?;
    Ok(TransportResult {
        frames: GridMatrixFunction::new(grid.clone(), values)?,
        rank: split.rank,
        residual,
        trace_deviation,
    })
}

/// `max ‖v⁻¹·p·v − diag(I_rank, 0)‖_F` over paired samples.
pub fn conjugation_residual(frames: &[CMatrix], samples: &[CMatrix], rank: usize) -> Result<f64> {
    let target = CMatrix::projector_block(samples.first().map_or(0, CMatrix::rows), rank);
    frames
        .par_iter()
        .zip(samples)
        .map(|(v, p)| Ok(v.similarity(p)?.dist(&target)))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `max |trace p(z) − rank|`; errors if the rounded trace is not constant.
pub fn rank_trace_deviation(samples: &[CMatrix], rank: usize) -> Result<f64> {
    let mut dev: f64 = 0.0;
    for p in samples {
        let tr = p.trace();
        let rounded = tr.re.round() as i64;
        if rounded != rank as i64 {
            return Err(Error::RankNotConstant {
                first: rank as i64,
                other: rounded,
            });
        }
        dev = dev.max((tr - rank as f64).norm());
    }
    Ok(dev)
}

/// Memo of transport frames keyed by the exact point, for one function and config.
#[derive(Default)]
pub(crate) struct TransportCache {
    frames: HashMap<PointKey, CMatrix>,
}

impl TransportCache {
    pub(crate) fn frames<F: MatrixField + ?Sized>(
        &mut self,
        p: &F,
        points: &[Point],
        cfg: &TransportConfig,
    ) -> Result<Vec<CMatrix>> {
        let keys: Vec<PointKey> = points.iter().map(|z| point_key(z)).collect();
        let mut missing: Vec<(PointKey, &Point)> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (k, z) in keys.iter().zip(points) {
            if !self.frames.contains_key(k) && queued.insert(k.clone()) {
                missing.push((k.clone(), z));
            }
        }
        let computed: Vec<Result<CMatrix>> = missing
            .par_iter()
            .map(|(_, z)| kato_transport(p, z, cfg))
            .collect();
        for ((k, z), f) in missing.into_iter().zip(computed) {
            let idx = points.iter().position(|q| q == z).unwrap_or(0);
            self.frames.insert(k, f.map_err(|e| e.at_point(idx, z))?);
        }
        Ok(keys.iter().map(|k| self.frames[k].clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::{build_grid, GridLayout, MatrixFunctionExpr};

    /// `R(θ·Re z₀)·diag(1,0)·R(θ·Re z₀)⁻¹`, a rank-one rotation family.
    struct Rotating {
        theta: f64,
    }

    impl MatrixField for Rotating {
        fn dims(&self) -> (usize, usize) {
            (2, 2)
        }
        fn eval(&self, z: &[Complex64]) -> Result<CMatrix> {
            let (s, co) = (self.theta * z[0].re).sin_cos();
            Ok(CMatrix::from_real_rows(&[&[co * co, co * s], &[co * s, s * s]]))
        }
    }

    #[test]
    fn contraction_endpoints() {
        let h = ContractionHomotopy {
            domain: DomainDescriptor::polydisc(2),
        };
        let x = vec![c(0.5, 0.25), c(-1.0, 0.0)];
        assert_eq!(h.contract_point(&x, 1.0), x);
        assert_eq!(h.contract_point(&x, 0.0), vec![c(0.0, 0.0); 2]);
        assert_eq!(h.contract_point(&x, 0.5), vec![c(0.25, 0.125), c(-0.5, 0.0)]);
    }

    #[test]
    fn constant_projector_has_identity_frame() {
        let p = MatrixFunctionExpr::Const(CMatrix::projector_block(3, 1));
        let f = kato_transport(&p, &[c(0.7, 0.1)], &TransportConfig::default()).unwrap();
        assert_eq!(f, CMatrix::identity(3));
    }

    #[test]
    fn rotation_family_is_transported() {
        let p = Rotating {
            theta: std::f64::consts::FRAC_PI_3,
        };
        let x = [c(1.0, 0.0)];
        let f = kato_transport(&p, &x, &TransportConfig::default()).unwrap();
        let moved = &(&f * &CMatrix::projector_block(2, 1)) * &f.inverse().unwrap();
        assert!(moved.dist(&p.eval(&x).unwrap()) < 1e-8);
        // along the path the trace stays at the rank
        for k in 0..=10 {
            let v = p.eval(&[c(k as f64 / 10.0, 0.0)]).unwrap();
            assert!((v.trace() - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn non_idempotent_path_is_rejected() {
        let p = MatrixFunctionExpr::Const(CMatrix::identity(2).scale_real(0.5));
        let err = kato_transport(&p, &[c(1.0, 0.0)], &TransportConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NotIdempotentAlongPath { .. }));
    }

    #[test]
    fn too_few_steps_is_a_config_error() {
        let p = MatrixFunctionExpr::Const(CMatrix::projector_block(2, 1));
        let cfg = TransportConfig::with_steps(8);
        assert!(matches!(
            kato_transport(&p, &[c(1.0, 0.0)], &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn constant_diagonal_trivializes_to_identity_frames() {
        let p = MatrixFunctionExpr::Const(CMatrix::projector_block(3, 2));
        let g = build_grid(DomainDescriptor::polydisc(1), GridLayout::nested(3, 4)).unwrap();
        let r = trivialize_idempotent(&p, &g, &TransportConfig::default()).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.residual, 0.0);
        assert!(r.frames.values.iter().all(|v| *v == CMatrix::identity(3)));
    }

    #[test]
    fn halving_the_step_shrinks_the_residual() {
        let p = Rotating {
            theta: 1.5 * std::f64::consts::PI,
        };
        let x = [c(1.0, 0.0)];
        let residual = |steps| {
            let f = kato_transport(&p, &x, &TransportConfig::with_steps(steps)).unwrap();
            let moved = &(&f * &CMatrix::projector_block(2, 1)) * &f.inverse().unwrap();
            moved.dist(&p.eval(&x).unwrap())
        };
        let (coarse, fine) = (residual(32), residual(64));
        assert!(fine < coarse / 12.0, "{coarse} -> {fine}");
    }

    #[test]
    fn transport_is_deterministic() {
        let p = Rotating { theta: 1.3 };
        let x = [c(0.9, 0.0)];
        let cfg = TransportConfig::with_steps(64);
        let a = kato_transport(&p, &x, &cfg).unwrap();
        let b = kato_transport(&p, &x, &cfg).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
