//! Matrix-valued functions on the domain chain `Δ_k`: exact expression trees, sample
//! grids, the star involution, derivatives, the `∂⁻ᴺ` norm and residual measurements.

mod expr;
mod grid;
mod poly;

pub use expr::{evaluate, star_involution, MatrixFunctionExpr};
pub use grid::{
    build_grid, ConjClosedGrid, DomainDescriptor, FactorKind, GridLayout, GridMatrixFunction,
};
pub use poly::{multi_factorial, multi_indices, poly_derivative, MatrixPoly};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numc::{min_singular_value, CMatrix};

/// A point of `ℂⁿ`.
pub type Point = Vec<Complex64>;

pub(crate) type PointKey = Vec<(u64, u64)>;

/// Bit-level key of a point, with `-0.0` folded into `+0.0`.
pub(crate) fn point_key(z: &[Complex64]) -> PointKey {
    z.iter()
        .map(|x| ((x.re + 0.0).to_bits(), (x.im + 0.0).to_bits()))
        .collect()
}

pub(crate) fn point_pairs(z: &[Complex64]) -> Vec<[f64; 2]> {
    z.iter().map(|x| [x.re, x.im]).collect()
}

pub fn scale_point(z: &[Complex64], s: f64) -> Point {
    z.iter().map(|x| x * s).collect()
}

pub fn conj_point(z: &[Complex64]) -> Point {
    z.iter().map(|x| x.conj()).collect()
}

/// Anything that can be evaluated pointwise to a matrix.
pub trait MatrixField: Sync {
    fn dims(&self) -> (usize, usize);
    fn eval(&self, z: &[Complex64]) -> Result<CMatrix>;
}

impl<F: MatrixField + ?Sized> MatrixField for &F {
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }
    fn eval(&self, z: &[Complex64]) -> Result<CMatrix> {
        (**self).eval(z)
    }
}

/// Default step for central differences along rays.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `d/ds f(s·x)` by central differences with one Richardson extrapolation level.
pub fn ray_derivative<F: MatrixField + ?Sized>(f: &F, x: &[Complex64], s: f64, h: f64) -> Result<CMatrix> {
    let central = |step: f64| -> Result<CMatrix> {
        let plus = f.eval(&scale_point(x, s + step))?;
        let minus = f.eval(&scale_point(x, s - step))?;
        Ok((&plus - &minus).scale_real(0.5 / step))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((&fine.scale_real(4.0) - &coarse).scale_real(1.0 / 3.0))
}

/// Evaluates `f` at every grid point, in grid order.
pub fn sample<F: MatrixField + ?Sized>(f: &F, grid: &ConjClosedGrid) -> Result<Vec<CMatrix>> {
    grid.points()
        .par_iter()
        .enumerate()
        .map(|(i, z)| f.eval(z).map_err(|e| e.at_point(i, z)))
        .collect()
}

/// `max ‖f(z) − conj(f(z̄))‖_F` over conjugate pairs of the grid.
pub fn real_symmetry_residual<F: MatrixField + ?Sized>(f: &F, grid: &ConjClosedGrid) -> Result<f64> {
    let values = sample(f, grid)?;
    Ok(GridMatrixFunction::new(grid.clone(), values)?.symmetry_residual())
}

/// `max ‖p(z)² − p(z)‖_F` over the grid.
pub fn idempotency_residual<F: MatrixField + ?Sized>(p: &F, grid: &ConjClosedGrid) -> Result<f64> {
    Ok(sample(p, grid)?
        .iter()
        .map(|v| (&(v * v) - v).norm_fro())
        .fold(0.0, f64::max))
}

/// Minimum over the grid of the smallest singular value of `f(z)`.
pub fn invertibility_margin<F: MatrixField + ?Sized>(f: &F, grid: &ConjClosedGrid) -> Result<f64> {
    Ok(sample(f, grid)?
        .iter()
        .map(min_singular_value)
        .fold(f64::INFINITY, f64::min))
}

/// `Σ_{|α| ≤ N} (1/α!) · max_grid ‖∂^α f‖_F`, the grid surrogate of the `∂⁻ᴺA` norm.
///
/// Matrix-valued polynomials use the Frobenius norm of the derivative's value.
pub fn dn_norm(f: &MatrixPoly, order: u32, grid: &ConjClosedGrid) -> Result<f64> {
    if grid.domain().n != f.nvars() {
        return Err(Error::GridMismatch(format!(
            "grid has {} coordinates, polynomial has {} variables",
            grid.domain().n,
            f.nvars()
        )));
    }
    let mut total = 0.0;
    for alpha in multi_indices(f.nvars(), order) {
        let d = f.derivative(&alpha);
        let sup = grid
            .points()
            .iter()
            .map(|z| d.eval(z).norm_fro())
            .fold(0.0, f64::max);
        total += sup / multi_factorial(&alpha);
    }
    Ok(total)
}
