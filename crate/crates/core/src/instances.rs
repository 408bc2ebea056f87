//! Seeded random instances for both pipelines.
//!
//! Coefficients come from ChaCha8 seeded with `seed_from_u64(seed)`. Each uniform on
//! `[−1, 1]` is `2·((next_u64 >> 11)·2⁻⁵³) − 1`. Draws run over multi-indices in graded
//! lexicographic order (the order of [`multi_indices`]), then over matrix entries in
//! row-major order; a complex entry takes its real part first.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::funcrep::{multi_indices, star_involution, MatrixFunctionExpr, MatrixPoly};
use crate::numc::{c, CMatrix};

/// Bound on `ε·Σ_α ‖M_α‖_F` for idempotent instances; dominates the polydisc sup of `‖εM‖`.
pub const IDEMPOTENT_PERTURBATION_BOUND: f64 = 0.85;
/// Same bound for the unitary instances.
pub const UNITARY_PERTURBATION_BOUND: f64 = 0.45;

struct Uniforms(ChaCha8Rng);

impl Uniforms {
    fn new(seed: u64) -> Self {
        Uniforms(ChaCha8Rng::seed_from_u64(seed))
    }

    fn next(&mut self) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    }
}

fn check_common(n: usize, m: usize, epsilon: f64) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("n and m must be positive".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} must be finite and >= 0")));
    }
    Ok(())
}

/// `I + ε·M` with the perturbation rescaled to keep `ε·Σ‖M_α‖_F ≤ bound`.
fn perturbed_identity(
    n: usize,
    m: usize,
    degree: u32,
    epsilon: f64,
    bound: f64,
    draws: &mut Uniforms,
    complex: bool,
) -> MatrixPoly {
    let mut terms: Vec<(Vec<u32>, CMatrix)> = multi_indices(n, degree)
        .into_iter()
        .map(|alpha| {
            let data = (0..m * m)
                .map(|_| {
                    let re = draws.next();
                    let im = if complex { draws.next() } else { 0.0 };
                    c(re, im)
                })
                .collect();
            (alpha, CMatrix::from_vec(m, m, data))
        })
        .collect();
    let total: f64 = terms.iter().map(|(_, k)| k.norm_fro()).sum();
    let scale = if epsilon * total > bound {
        bound / total
    } else {
        epsilon
    };
    for (alpha, k) in terms.iter_mut() {
        *k = k.scale_real(scale);
        if alpha.iter().all(|&a| a == 0) {
            *k = &*k + &CMatrix::identity(m);
        }
    }
    MatrixPoly::new(m, m, n, terms)
}

/// `P = T·diag(I_rank, 0)·T⁻¹` with `T = I + ε·M`, `M` of degree `degree` with real
/// coefficients. `P` is idempotent and real symmetric by construction.
pub fn gen_idempotent_instance(
    n: usize,
    m: usize,
    rank: usize,
    degree: u32,
    epsilon: f64,
    seed: u64,
) -> Result<MatrixFunctionExpr> {
    check_common(n, m, epsilon)?;
    if rank > m {
        return Err(Error::InvalidConfig(format!("rank {rank} exceeds size {m}")));
    }
    let mut draws = Uniforms::new(seed);
    let t = perturbed_identity(n, m, degree, epsilon, IDEMPOTENT_PERTURBATION_BOUND, &mut draws, false);
    Ok(MatrixFunctionExpr::Product(vec![
        MatrixFunctionExpr::Poly(t.clone()),
        MatrixFunctionExpr::Const(CMatrix::projector_block(m, rank)),
        MatrixFunctionExpr::inverse(MatrixFunctionExpr::Poly(t)),
    ]))
}

/// `(U, V)` with `V = I + ε·N`, complex coefficients, and `U = V·(V*)⁻¹`.
pub fn gen_symmetric_unitary_instance(
    n: usize,
    m: usize,
    degree: u32,
    epsilon: f64,
    seed: u64,
) -> Result<(MatrixFunctionExpr, MatrixFunctionExpr)> {
    check_common(n, m, epsilon)?;
    let mut draws = Uniforms::new(seed);
    let v = MatrixFunctionExpr::Poly(perturbed_identity(
        n,
        m,
        degree,
        epsilon,
        UNITARY_PERTURBATION_BOUND,
        &mut draws,
        true,
    ));
    let u = MatrixFunctionExpr::Product(vec![
        v.clone(),
        MatrixFunctionExpr::inverse(star_involution(&v)),
    ]);
    Ok((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epsilon_gives_constant_projector() {
        let p = gen_idempotent_instance(1, 3, 2, 2, 0.0, 7).unwrap();
        let z = [c(0.3, -0.8)];
        assert_eq!(p.evaluate(&z).unwrap(), CMatrix::projector_block(3, 2));
        let (u, _) = gen_symmetric_unitary_instance(2, 2, 2, 0.0, 7).unwrap();
        assert_eq!(u.evaluate(&[c(0.1, 0.2), c(-0.5, 0.5)]).unwrap(), CMatrix::identity(2));
    }

    #[test]
    fn seeds_reproduce_and_differ() {
        let a = gen_idempotent_instance(2, 3, 1, 2, 0.3, 11).unwrap();
        let b = gen_idempotent_instance(2, 3, 1, 2, 0.3, 11).unwrap();
        let other = gen_idempotent_instance(2, 3, 1, 2, 0.3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn uniform_stream_is_reproducible() {
        let mut d = Uniforms::new(0);
        let first: Vec<f64> = (0..3).map(|_| d.next()).collect();
        let mut again = Uniforms::new(0);
        assert_eq!(first, (0..3).map(|_| again.next()).collect::<Vec<_>>());
        assert!(first.iter().all(|x| (-1.0..1.0).contains(x)));
    }

    #[test]
    fn perturbation_is_bounded() {
        let p = gen_idempotent_instance(1, 4, 2, 2, 10.0, 3).unwrap();
        let MatrixFunctionExpr::Product(parts) = &p else {
            panic!("unexpected tree")
        };
        let MatrixFunctionExpr::Poly(t) = &parts[0] else {
            panic!("unexpected leaf")
        };
        let total: f64 = t
            .terms()
            .iter()
            .map(|(alpha, k)| {
                if alpha.iter().all(|&a| a == 0) {
                    (k - &CMatrix::identity(4)).norm_fro()
                } else {
                    k.norm_fro()
                }
            })
            .sum();
        assert!(total <= IDEMPOTENT_PERTURBATION_BOUND + 1e-12);
    }

    #[test]
    fn rank_above_size_is_rejected() {
        assert!(gen_idempotent_instance(1, 2, 3, 1, 0.1, 0).is_err());
    }
}
