//! Splitting a constant idempotent into range and kernel frames.

use num_complex::Complex64;

use super::matrix::c;
use super::spectral::eigenvalues;
use super::{CMatrix, LinalgError};

/// Eigenvalues further than this from both 0 and 1 make a split ill-conditioned.
pub const CLUSTER_MARGIN: f64 = 0.1;

/// Result of [`idempotent_split`]: `w⁻¹·a·w = diag(I_rank, 0)`.
#[derive(Debug, Clone)]
pub struct IdempotentSplit {
    pub frame: CMatrix,
    pub rank: usize,
}

/// Conjugator taking an idempotent to `diag(I_rank, 0)`.
///
/// The first `rank` columns of the frame are an orthonormal basis of `range(a)`, the rest
/// an orthonormal basis of `range(I − a)`, both found by column-pivoted Gram–Schmidt.
/// Only field operations and real square roots are used, so a real input yields a real
/// frame.
pub fn idempotent_split(a: &CMatrix, tol_resid: f64) -> Result<IdempotentSplit, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::Shape("split of a non-square matrix".into()));
    }
    let n = a.rows();
    let defect = (&(a * a) - a).norm_fro();
    if !(defect <= tol_resid) {
        return Err(LinalgError::NotIdempotent { defect });
    }
    let tr = a.trace().re;
    let rank = tr.round();
    if rank < 0.0 || rank > n as f64 {
        return Err(LinalgError::IllConditionedSplit(format!(
            "trace {tr} outside [0, {n}]"
        )));
    }
    let rank = rank as usize;
    let mut near_one = 0;
    for lam in eigenvalues(a)? {
        let d0 = lam.norm();
        let d1 = (lam - 1.0).norm();
        if d0.min(d1) > CLUSTER_MARGIN {
            return Err(LinalgError::IllConditionedSplit(format!(
                "eigenvalue {lam} is not near 0 or 1"
            )));
        }
        if d1 < d0 {
            near_one += 1;
        }
    }
    if near_one != rank {
        return Err(LinalgError::IllConditionedSplit(format!(
            "{near_one} eigenvalues near 1 but trace rounds to {rank}"
        )));
    }

    let complement = &CMatrix::identity(n) - a;
    let mut frame = CMatrix::zeros(n, n);
    let range = pivoted_basis(a, rank);
    let kernel = pivoted_basis(&complement, n - rank);
    for (j, col) in range.iter().chain(kernel.iter()).enumerate() {
        frame.set_column(j, col);
    }
    if (0..n).any(|j| frame.column(j).iter().all(|x| x.norm() == 0.0)) {
        return Err(LinalgError::IllConditionedSplit(
            "could not extract a full frame".into(),
        ));
    }
    Ok(IdempotentSplit { frame, rank })
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(u: &[Complex64]) -> f64 {
    u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `count` orthonormal vectors spanning the dominant part of the column space of `m`.
fn pivoted_basis(m: &CMatrix, count: usize) -> Vec<Vec<Complex64>> {
    let mut cols: Vec<Vec<Complex64>> = (0..m.cols()).map(|j| m.column(j)).collect();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let (best, best_norm) = cols
            .iter()
            .enumerate()
            .map(|(j, col)| (j, norm(col)))
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best_norm <= 0.0 {
            break;
        }
        let mut q = cols[best].clone();
        // two passes of modified Gram-Schmidt against the accepted vectors
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b, &q);
                for (qi, bi) in q.iter_mut().zip(b) {
                    *qi -= proj * bi;
                }
            }
        }
        let qn = norm(&q);
        if qn == 0.0 {
            break;
        }
        for qi in q.iter_mut() {
            *qi /= qn;
        }
        for col in cols.iter_mut() {
            let proj = dot(&q, col);
            for (ci, qi) in col.iter_mut().zip(&q) {
                *ci -= proj * qi;
            }
        }
        cols[best].iter_mut().for_each(|x| *x = c(0.0, 0.0));
        basis.push(q);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_diagonal() {
        let p = CMatrix::projector_block(2, 1);
        let s = idempotent_split(&p, 1e-6).unwrap();
        assert_eq!(s.rank, 1);
        assert_eq!(s.frame, CMatrix::identity(2));
    }

    #[test]
    fn zero_projector() {
        let s = idempotent_split(&CMatrix::zeros(3, 3), 1e-6).unwrap();
        assert_eq!(s.rank, 0);
        assert_eq!(s.frame, CMatrix::identity(3));
    }

    #[test]
    fn averaging_projector_matches_eigenvectors() {
        let p = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let s = idempotent_split(&p, 1e-6).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = CMatrix::from_real_rows(&[&[r, r], &[r, -r]]);
        assert_eq!(s.rank, 1);
        assert!(s.frame.dist(&expected) < 1e-15);
        assert!(s.frame.is_real());
        let d = s.frame.similarity(&p).unwrap();
        assert!(d.dist(&CMatrix::projector_block(2, 1)) < 1e-15);
    }

    #[test]
    fn oblique_complex_projector() {
        let t = CMatrix::from_rows(&[
            vec![c(1.0, 0.2), c(0.3, 0.0), c(0.0, -0.4)],
            vec![c(0.1, 0.0), c(1.0, 0.0), c(0.2, 0.2)],
            vec![c(-0.3, 0.1), c(0.0, 0.5), c(1.0, 0.0)],
        ])
        .unwrap();
        let p = &(&t * &CMatrix::projector_block(3, 2)) * &t.inverse().unwrap();
        let s = idempotent_split(&p, 1e-6).unwrap();
        assert_eq!(s.rank, 2);
        let d = s.frame.similarity(&p).unwrap();
        assert!(d.dist(&CMatrix::projector_block(3, 2)) < 1e-13);
    }

    #[test]
    fn non_idempotent_is_rejected() {
        let a = CMatrix::identity(2).scale_real(2.0);
        assert!(matches!(
            idempotent_split(&a, 1e-6),
            Err(LinalgError::NotIdempotent { .. })
        ));
    }

    #[test]
    fn spectrum_away_from_zero_and_one_is_rejected() {
        // idempotency check passes at this loose tolerance, clustering does not
        let a = CMatrix::from_diag(&[c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            idempotent_split(&a, 1.0),
            Err(LinalgError::IllConditionedSplit(_))
        ));
    }
}
