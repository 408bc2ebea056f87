//! Schur form, eigenvalues and singular values, backed by `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CMatrix, LinalgError};

fn to_na(a: &CMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn from_na(m: &DMatrix<Complex64>) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// Complex Schur decomposition `a = q·t·q*` with `q` unitary and `t` upper triangular.
pub struct Schur {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl Schur {
    pub fn new(a: &CMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Shape("schur of a non-square matrix".into()));
        }
        let n = a.rows();
        let schur = nalgebra::linalg::Schur::try_new(to_na(a), 1e-15, 10_000)
            .ok_or(LinalgError::NoConvergence("complex Schur iteration"))?;
        let (q, t) = schur.unpack();
        let q = from_na(&q);
        let mut t = from_na(&t);
        // below-diagonal entries are rounding residue of deflation
        for i in 0..n {
            for j in 0..i {
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Schur { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.rows()).map(|i| self.t[(i, i)]).collect()
    }
}

pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>, LinalgError> {
    Ok(Schur::new(a)?.eigenvalues())
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let sv = to_na(a).singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

pub fn min_singular_value(a: &CMatrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numc::matrix::c;

    #[test]
    fn schur_reconstructs_complex_matrix() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(0.3, -1.0), c(2.0, 0.0)],
            vec![c(-0.5, 0.1), c(0.0, 1.0), c(1.0, 1.0)],
            vec![c(0.2, 0.0), c(-1.0, 0.4), c(3.0, -2.0)],
        ])
        .unwrap();
        let s = Schur::new(&a).unwrap();
        let back = &(&s.q * &s.t) * &s.q.adjoint();
        assert!(back.dist(&a) < 1e-12, "{}", back.dist(&a));
        assert!((&s.q.adjoint() * &s.q).dist_identity() < 1e-12);
        let tr: Complex64 = s.eigenvalues().iter().sum();
        assert!((tr - a.trace()).norm() < 1e-12);
    }

    #[test]
    fn rotation_has_unimodular_eigenvalues() {
        let r = CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let mut ev = eigenvalues(&r).unwrap();
        ev.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let d = CMatrix::from_diag(&[c(3.0, 0.0), c(0.0, -0.5)]);
        let sv = singular_values(&d);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 0.5).abs() < 1e-14);
    }
}
