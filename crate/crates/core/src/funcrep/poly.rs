use num_complex::Complex64;

use crate::numc::{c, CMatrix};

/// All multi-indices in `nvars` variables with total degree at most `max_degree`,
/// ordered by total degree and then lexicographically.
pub fn multi_indices(nvars: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, left: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            if remaining == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for e in 0..=remaining {
            prefix.push(e);
            rec(prefix, left - 1, remaining - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=max_degree {
        rec(&mut Vec::with_capacity(nvars), nvars, d, &mut out);
    }
    out
}

pub fn multi_factorial(alpha: &[u32]) -> f64 {
    alpha
        .iter()
        .map(|&a| (1..=a).map(f64::from).product::<f64>())
        .product()
}

/// Matrix-valued polynomial `Σ_α C_α z^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoly {
    rows: usize,
    cols: usize,
    nvars: usize,
    terms: Vec<(Vec<u32>, CMatrix)>,
}

impl MatrixPoly {
    /// Panics if a coefficient's shape or an exponent's length is inconsistent.
    pub fn new(rows: usize, cols: usize, nvars: usize, terms: Vec<(Vec<u32>, CMatrix)>) -> Self {
        for (alpha, coeff) in &terms {
            assert_eq!(alpha.len(), nvars, "exponent length must equal nvars");
            assert_eq!(coeff.dims(), (rows, cols), "coefficient shape mismatch");
        }
        MatrixPoly {
            rows,
            cols,
            nvars,
            terms,
        }
    }

    pub fn constant(nvars: usize, value: CMatrix) -> Self {
        let (r, cl) = value.dims();
        MatrixPoly::new(r, cl, nvars, vec![(vec![0; nvars], value)])
    }

    /// Scalar monomial `coeff · z^alpha` as a 1×1 polynomial.
    pub fn scalar_monomial(alpha: Vec<u32>, coeff: Complex64) -> Self {
        let n = alpha.len();
        MatrixPoly::new(1, 1, n, vec![(alpha, CMatrix::from_vec(1, 1, vec![coeff]))])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, CMatrix)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(a, _)| a.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Panics if `z` has the wrong number of coordinates.
    pub fn eval(&self, z: &[Complex64]) -> CMatrix {
        assert_eq!(z.len(), self.nvars, "point dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for (alpha, coeff) in &self.terms {
            let mut mono = c(1.0, 0.0);
            for (&zv, &e) in z.iter().zip(alpha) {
                for _ in 0..e {
                    mono *= zv;
                }
            }
            for (a, &k) in out.data_mut().iter_mut().zip(coeff.as_slice()) {
                *a += k * mono;
            }
        }
        out
    }

    /// Polynomial with entrywise conjugated coefficients, i.e. `f*(z) = conj(f(z̄))`.
    pub fn conj_coefficients(&self) -> MatrixPoly {
        MatrixPoly {
            terms: self
                .terms
                .iter()
                .map(|(a, k)| (a.clone(), k.conj()))
                .collect(),
            ..self.clone()
        }
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.iter().all(|(_, k)| k.is_real())
    }

    /// Exact formal partial derivative `∂^alpha f`.
    pub fn derivative(&self, alpha: &[u32]) -> MatrixPoly {
        assert_eq!(alpha.len(), self.nvars, "multi-index length must equal nvars");
        let terms = self
            .terms
            .iter()
            .filter(|(beta, _)| beta.iter().zip(alpha).all(|(b, a)| b >= a))
            .map(|(beta, k)| {
                let factor: f64 = beta
                    .iter()
                    .zip(alpha)
                    .map(|(&b, &a)| ((b - a + 1)..=b).map(f64::from).product::<f64>())
                    .product();
                let reduced: Vec<u32> = beta.iter().zip(alpha).map(|(b, a)| b - a).collect();
                (reduced, k.scale_real(factor))
            })
            .collect();
        MatrixPoly {
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            terms,
        }
    }
}

/// `∂^alpha f` for a polynomial leaf.
pub fn poly_derivative(f: &MatrixPoly, alpha: &[u32]) -> MatrixPoly {
    f.derivative(alpha)
}
