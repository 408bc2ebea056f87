//! Branch-controlled matrix logarithm.
//!
//! The cut is the ray `e^{iθ}·(−∞, 0]`; eigenvalue arguments of the result lie in the
//! window `(θ − π, θ + π)`. Computation goes through the complex Schur form and the
//! inverse scaling-and-squaring method on the triangular factor.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::matrix::c;
use super::spectral::Schur;
use super::{CMatrix, LinalgError, DEFAULT_SINGULAR_FLOOR};

/// Eigenvalues closer than this (in radians) to the cut ray are rejected.
pub const DEFAULT_CUT_TOLERANCE: f64 = 1e-8;

/// Rotation `θ ∈ [0, 2π)` of the logarithm's cut ray `e^{iθ}·(−∞, 0]`.
///
/// `θ = 0` is the principal branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAngle(f64);

impl BranchAngle {
    pub const PRINCIPAL: BranchAngle = BranchAngle(0.0);

    pub fn new(theta: f64) -> Result<Self, LinalgError> {
        if !theta.is_finite() {
            return Err(LinalgError::InvalidArgument("branch angle must be finite".into()));
        }
        let t = theta.rem_euclid(TAU);
        Ok(BranchAngle(if t >= TAU { 0.0 } else { t }))
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Argument of the imaginary-part window `(θ − π, θ + π)`.
    pub fn window(self) -> (f64, f64) {
        (self.0 - PI, self.0 + PI)
    }

    /// Angular distance from `arg z` to the cut direction `θ + π`.
    fn distance_to_cut(self, z: Complex64) -> f64 {
        let rotated = z * Complex64::from_polar(1.0, -self.0);
        PI - rotated.arg().abs()
    }
}

/// Picks the cut in the middle of the widest angular gap between eigenvalue arguments.
pub fn auto_branch(eigenvalues: &[Complex64]) -> BranchAngle {
    let mut args: Vec<f64> = eigenvalues
        .iter()
        .filter(|z| z.norm() > 0.0)
        .map(|z| z.arg().rem_euclid(TAU))
        .collect();
    if args.is_empty() {
        return BranchAngle::PRINCIPAL;
    }
    args.sort_by(f64::total_cmp);
    let mut best_gap = -1.0;
    let mut best_mid = 0.0;
    for (i, &a) in args.iter().enumerate() {
        let next = if i + 1 < args.len() { args[i + 1] } else { args[0] + TAU };
        let gap = next - a;
        if gap > best_gap {
            best_gap = gap;
            best_mid = a + 0.5 * gap;
        }
    }
    // the ray e^{iθ}(−∞,0] points along θ + π
    BranchAngle((best_mid - PI).rem_euclid(TAU))
}

/// Branch for `a` chosen by [`auto_branch`] on its eigenvalues.
pub fn auto_branch_for(a: &CMatrix) -> Result<BranchAngle, LinalgError> {
    Ok(auto_branch(&Schur::new(a)?.eigenvalues()))
}

pub fn mat_logm(a: &CMatrix, branch: BranchAngle) -> Result<CMatrix, LinalgError> {
    mat_logm_with(a, branch, DEFAULT_CUT_TOLERANCE, DEFAULT_SINGULAR_FLOOR)
}

pub fn mat_logm_with(
    a: &CMatrix,
    branch: BranchAngle,
    cut_tolerance: f64,
    singular_floor: f64,
) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::Shape("logm of a non-square matrix".into()));
    }
    let n = a.rows();
    let scale = a.norm_fro();
    let schur = Schur::new(a)?;
    for lam in schur.eigenvalues() {
        if lam.norm() <= singular_floor * scale {
            return Err(LinalgError::SingularMatrix {
                sigma_min: lam.norm(),
            });
        }
        if branch.distance_to_cut(lam) <= cut_tolerance {
            return Err(LinalgError::EigenvalueOnBranchCut {
                eigenvalue: [lam.re, lam.im],
                theta: branch.theta(),
            });
        }
    }
    let rot = Complex64::from_polar(1.0, -branch.theta());
    let t = schur.t.scale(rot);
    let log_t = principal_log_triangular(&t)?;
    let shift = CMatrix::identity(n).scale(c(0.0, branch.theta()));
    Ok(&(&(&schur.q * &log_t) * &schur.q.adjoint()) + &shift)
}

/// Principal square root of an upper triangular matrix with no eigenvalues on `(−∞, 0]`.
fn sqrt_triangular(t: &CMatrix) -> CMatrix {
    let n = t.rows();
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

// 8-point Gauss-Legendre rule on [-1, 1]
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn principal_log_triangular(t: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = t.rows();
    let mut r = t.clone();
    let mut roots = 0;
    while r.dist_identity() > 0.25 {
        if roots >= 60 {
            return Err(LinalgError::NoConvergence("inverse scaling and squaring"));
        }
        r = sqrt_triangular(&r);
        roots += 1;
    }
    let x = &r - &CMatrix::identity(n);
    // log(I + X) = ∫₀¹ X (I + sX)⁻¹ ds
    let mut acc = CMatrix::zeros(n, n);
    for (&node, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        for s in [0.5 * (1.0 - node), 0.5 * (1.0 + node)] {
            let denom = &CMatrix::identity(n) + &x.scale_real(s);
            acc = &acc + &denom.solve(&x)?.scale_real(0.5 * w);
        }
    }
    Ok(acc.scale_real(2f64.powi(roots)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numc::mat_expm;
    use std::f64::consts::FRAC_PI_2;

    fn off_by(a: &CMatrix, b: &CMatrix) -> f64 {
        a.dist(b)
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = mat_logm(&CMatrix::identity(3), BranchAngle::new(1.0).unwrap()).unwrap();
        assert!(l.norm_fro() < 1e-15);
    }

    #[test]
    fn principal_branch_on_conjugate_pair() {
        let a = CMatrix::from_diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let l = mat_logm(&a, BranchAngle::PRINCIPAL).unwrap();
        let expected = CMatrix::from_diag(&[c(0.0, FRAC_PI_2), c(0.0, -FRAC_PI_2)]);
        assert!(off_by(&l, &expected) < 1e-14);
        assert!(mat_expm(&l).unwrap().dist(&a) < 1e-14);
    }

    #[test]
    fn cut_along_positive_axis_shifts_window() {
        // θ = π puts the cut on [0, ∞): arguments live in (0, 2π)
        let a = CMatrix::from_diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let l = mat_logm(&a, BranchAngle::new(PI).unwrap()).unwrap();
        let expected = CMatrix::from_diag(&[c(0.0, FRAC_PI_2), c(0.0, 3.0 * FRAC_PI_2)]);
        assert!(off_by(&l, &expected) < 1e-14);
    }

    #[test]
    fn minus_identity_with_cut_on_negative_imaginary_axis() {
        let a = CMatrix::identity(2).scale_real(-1.0);
        let l = mat_logm(&a, BranchAngle::new(FRAC_PI_2).unwrap()).unwrap();
        assert!(off_by(&l, &CMatrix::identity(2).scale(c(0.0, PI))) < 1e-14);
        assert!(mat_expm(&l).unwrap().dist(&a) < 1e-14);
    }

    #[test]
    fn eigenvalue_on_cut_is_rejected() {
        let a = CMatrix::identity(2).scale_real(-1.0);
        assert!(matches!(
            mat_logm(&a, BranchAngle::PRINCIPAL),
            Err(LinalgError::EigenvalueOnBranchCut { .. })
        ));
    }

    #[test]
    fn singular_input_is_rejected() {
        let a = CMatrix::from_diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            mat_logm(&a, BranchAngle::PRINCIPAL),
            Err(LinalgError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn auto_branch_sits_opposite_a_single_cluster() {
        assert_eq!(auto_branch(&[c(1.0, 0.0), c(2.0, 0.0)]).theta(), 0.0);
        let b = auto_branch(&[c(-1.0, 0.0)]);
        assert!((b.theta() - PI).abs() < 1e-15);
        // eigenvalues at ±i: gaps of π each, the first one (around arg π) is centred at π
        let b = auto_branch(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let cut_direction = (b.theta() + PI).rem_euclid(TAU);
        assert!((cut_direction - 0.0).abs() < 1e-12 || (cut_direction - PI).abs() < 1e-12);
    }

    #[test]
    fn defective_matrix_round_trip() {
        let a = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        ])
        .unwrap();
        let l = mat_logm(&a, BranchAngle::PRINCIPAL).unwrap();
        assert!(mat_expm(&l).unwrap().dist(&a) < 1e-13);
        let ln2 = 2f64.ln();
        let expected = CMatrix::from_real_rows(&[
            &[ln2, 0.5, -0.125],
            &[0.0, ln2, 0.5],
            &[0.0, 0.0, ln2],
        ]);
        assert!(l.dist(&expected) < 1e-13);
    }
}
