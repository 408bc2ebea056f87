//! Symmetric factorization `U(z) = V(z)·conj(V(z̄))⁻¹` of star-unitary functions.
//!
//! Along the homotopy `U_t(z) = U(t·z)` the factor solves
//! `∂V_t/∂t·V_t⁻¹ = ½·∂U_t/∂t·U_t⁻¹` from `V₀ = e^{iY/2}`, where `U(0) = e^{iY}` with
//! `Y` real.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::{
    ray_derivative, sample, scale_point, ConjClosedGrid, GridMatrixFunction, MatrixField,
    DEFAULT_FD_STEP,
};
use crate::numc::{auto_branch_for, c, mat_expm, mat_logm, BranchAngle, CMatrix, Tolerances};
use crate::ode::rk4_linear;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// Cut through the middle of the widest gap in the argument spectrum.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationConfig {
    pub ode_steps: usize,
    pub fd_step: f64,
    pub branch: BranchPolicy,
    pub tol: Tolerances,
}

impl Default for FactorizationConfig {
    fn default() -> Self {
        FactorizationConfig {
            ode_steps: 200,
            fd_step: DEFAULT_FD_STEP,
            branch: BranchPolicy::Auto,
            tol: Tolerances::default(),
        }
    }
}

impl FactorizationConfig {
    pub fn with_steps(ode_steps: usize) -> Self {
        FactorizationConfig {
            ode_steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ode_steps < 16 {
            return Err(Error::InvalidConfig(format!(
                "ode_steps must be at least 16 (got {})",
                self.ode_steps
            )));
        }
        if !(self.fd_step > 1e-9 && self.fd_step < 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "fd_step {} outside (1e-9, 1e-2)",
                self.fd_step
            )));
        }
        Ok(())
    }
}

/// `max ‖u(z)·conj(u(z̄)) − I‖_F` over conjugate pairs of the grid.
pub fn star_relation_residual<F: MatrixField + ?Sized>(u: &F, grid: &ConjClosedGrid) -> Result<f64> {
    let values = sample(u, grid)?;
    Ok(grid
        .conj_index()
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (&values[i] * &values[j].conj()).dist_identity()))
        .fold(0.0, f64::max))
}

/// Pieces of the initial factor: `Log u0 = X + iY` and `V₀ = e^{iY/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFactor {
    pub v0: CMatrix,
    pub x: CMatrix,
    pub y: CMatrix,
    pub branch: BranchAngle,
}

pub fn initial_factor_parts(u0: &CMatrix, cfg: &FactorizationConfig) -> Result<InitialFactor> {
    let residual = (u0 * &u0.conj()).dist_identity();
    if !(residual <= cfg.tol.resid) {
        return Err(Error::StarRelationViolated { residual });
    }
    let branch = match cfg.branch {
        BranchPolicy::Auto => auto_branch_for(u0)?,
        BranchPolicy::Fixed(theta) => BranchAngle::new(theta)?,
    };
    let log = mat_logm(u0, branch)?;
    let x = log.real_part();
    let y = log.imag_part();
    let defect = x.norm_fro().max(x.commutator(&y).norm_fro());
    if !(defect <= cfg.tol.resid) {
        return Err(Error::StarRelationViolated { residual: defect });
    }
    let v0 = mat_expm(&y.scale(c(0.0, 0.5)))?;
    Ok(InitialFactor { v0, x, y, branch })
}

/// `V₀` with `V₀·conj(V₀)⁻¹ = u0`.
pub fn initial_factor(u0: &CMatrix, cfg: &FactorizationConfig) -> Result<CMatrix> {
    Ok(initial_factor_parts(u0, cfg)?.v0)
}

fn origin_value<F: MatrixField + ?Sized>(u: &F, n: usize) -> Result<CMatrix> {
    u.eval(&vec![c(0.0, 0.0); n])
}

fn integrate<F: MatrixField + ?Sized>(
    u: &F,
    z: &[Complex64],
    v0: &CMatrix,
    cfg: &FactorizationConfig,
) -> Result<CMatrix> {
    let generator = |t: f64| -> Result<CMatrix> {
        let along = |e: Error| match e.root() {
            Error::SingularAtPoint { .. } => Error::SingularAlongPath { t },
            _ => e,
        };
        let ut = u.eval(&scale_point(z, t)).map_err(along)?;
        let inv = ut
            .inverse_with_floor(cfg.tol.singular_floor)
            .map_err(|_| Error::SingularAlongPath { t })?;
        let dut = ray_derivative(u, z, t, cfg.fd_step).map_err(along)?;
        Ok((&dut * &inv).scale_real(0.5))
    };
    rk4_linear(generator, v0.clone(), cfg.ode_steps)
}

/// `V(z) = V₁(z)` from the homotopy equation started at `initial_factor(u(0))`.
pub fn ode_factorize_point<F: MatrixField + ?Sized>(
    u: &F,
    z: &[Complex64],
    cfg: &FactorizationConfig,
) -> Result<CMatrix> {
    cfg.validate()?;
    let v0 = initial_factor(&origin_value(u, z.len())?, cfg)?;
    integrate(u, z, &v0, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub reconstruction_residual: f64,
    pub star_residual: f64,
    pub min_singular_value: f64,
    /// Largest finite-difference `‖∂v/∂z̄‖_F` over interior polar stencils.
    pub holomorphy_diag: Option<f64>,
}

pub fn factorize_symmetric<F: MatrixField + ?Sized>(
    u: &F,
    grid: &ConjClosedGrid,
    cfg: &FactorizationConfig,
) -> Result<(GridMatrixFunction, FactorizationReport)> {
    cfg.validate()?;
    if grid.conj_index().iter().any(Option::is_none) {
        return Err(Error::GridMismatch(
            "factorization needs a conjugation-closed grid".into(),
        ));
    }
    let star_residual = star_relation_residual(u, grid)?;
    if !(star_residual <= cfg.tol.resid) {
        return Err(Error::StarRelationViolated {
            residual: star_residual,
        });
    }
    let v0 = initial_factor(&origin_value(u, grid.domain().n)?, cfg)?;
    let values: Vec<CMatrix> = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, z)| integrate(u, z, &v0, cfg).map_err(|e| e.at_point(i, z)))
        .collect::<Result<_>>()?;
    let v = GridMatrixFunction::new(grid.clone(), values)?;
    let report = FactorizationReport {
        reconstruction_residual: reconstruction_residual(u, &v)?,
        star_residual,
        min_singular_value: v.min_singular_value(),
        holomorphy_diag: holomorphy_diagnostic(&v),
    };
    Ok((v, report))
}

/// `max ‖u(z) − v(z)·conj(v(z̄))⁻¹‖_F` over conjugate pairs.
pub fn reconstruction_residual<F: MatrixField + ?Sized>(
    u: &F,
    v: &GridMatrixFunction,
) -> Result<f64> {
    let samples = sample(u, &v.grid)?;
    let pairs: Vec<(usize, usize)> = v
        .grid
        .conj_index()
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let rebuilt = &v.values[i] * &v.values[j].conj().inverse()?;
            Ok(rebuilt.dist(&samples[i]))
        })
        .try_reduce(|| 0.0, |a: f64, b| Ok(a.max(b)))
}

/// Largest `‖∂v/∂z̄‖_F` from central polar differences,
/// `∂/∂z̄ = (e^{iθ}/2)·(∂/∂r + (i/r)·∂/∂θ)`, over every disc coordinate.
pub fn holomorphy_diagnostic(v: &GridMatrixFunction) -> Option<f64> {
    let grid = &v.grid;
    let mut worst: Option<f64> = None;
    for coord in 0..grid.domain().n {
        for i in 0..grid.len() {
            let Some(st) = grid.polar_stencil(i, coord) else {
                continue;
            };
            let dr = (&v.values[st.r_plus] - &v.values[st.r_minus]).scale_real(0.5 / st.dr);
            let dt = (&v.values[st.a_plus] - &v.values[st.a_minus]).scale_real(0.5 / st.dtheta);
            let dzbar = &dr + &dt.scale(c(0.0, 1.0 / st.r));
            let mag = 0.5 * dzbar.norm_fro();
            worst = Some(worst.map_or(mag, |w| w.max(mag)));
        }
    }
    worst
}

/// `a(z) = conj(v(z̄))⁻¹` and `b(z) = conj(a(z̄))`, the coefficients of the star-fixed
/// basis `ẽ = a·e + b·e*`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisCoefficients {
    pub a: GridMatrixFunction,
    pub b: GridMatrixFunction,
    /// `max ‖a + b·u − 2a‖_F`.
    pub consistency: f64,
}

pub fn symmetric_basis_coefficients<F: MatrixField + ?Sized>(
    v: &GridMatrixFunction,
    u: &F,
) -> Result<BasisCoefficients> {
    let grid = &v.grid;
    let pair = |i: usize| {
        grid.conj_of(i)
            .ok_or_else(|| Error::GridMismatch(format!("grid point {i} has no conjugate")))
    };
    let a_values: Vec<CMatrix> = (0..grid.len())
        .map(|i| {
            let j = pair(i)?;
            v.values[j].conj().inverse().map_err(|_| Error::SingularAtPoint {
                point: crate::funcrep::point_pairs(grid.point(i)),
            })
        })
        .collect::<Result<_>>()?;
    let b_values: Vec<CMatrix> = (0..grid.len())
        .map(|i| Ok(a_values[pair(i)?].conj()))
        .collect::<Result<_>>()?;
    let samples = sample(u, grid)?;
    let consistency = a_values
        .iter()
        .zip(&b_values)
        .zip(&samples)
        .map(|((a, b), u)| (&(a + &(b * u)) - &a.scale_real(2.0)).norm_fro())
        .fold(0.0, f64::max);
    Ok(BasisCoefficients {
        a: GridMatrixFunction::new(grid.clone(), a_values)?,
        b: GridMatrixFunction::new(grid.clone(), b_values)?,
        consistency,
    })
}
