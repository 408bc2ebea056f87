use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LinalgError;

/// Relative singularity floor used by [`CMatrix::inverse`]: a matrix is rejected
/// when its estimated smallest singular value drops below `floor * ‖a‖_F`.
pub const DEFAULT_SINGULAR_FLOOR: f64 = 1e-12;

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Panics if the length is not `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows * cols");
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if r == 0 || cols == 0 || rows.iter().any(|row| row.len() != cols) {
            return Err(LinalgError::Shape(format!(
                "ragged or empty row list ({r} rows)"
            )));
        }
        Ok(CMatrix {
            rows: r,
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .flat_map(|row| {
                assert_eq!(row.len(), cols);
                row.iter().map(|&x| c(x, 0.0))
            })
            .collect();
        CMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// `diag(I_rank, 0)` of size `n`.
    pub fn projector_block(n: usize, rank: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..rank.min(n) {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row_vecs(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.cols).map(<[_]>::to_vec).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex64]) {
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|x| x * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    /// Entrywise real part, as a complex matrix with zero imaginary parts.
    pub fn real_part(&self) -> Self {
        self.map(|x| c(x.re, 0.0))
    }

    /// Entrywise imaginary part, as a complex matrix with zero imaginary parts.
    pub fn imag_part(&self) -> Self {
        self.map(|x| c(x.im, 0.0))
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.im.abs()))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|x| x.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖self − other‖_F`. Panics on a shape mismatch.
    pub fn dist(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self − I‖_F` for a square matrix.
    pub fn dist_identity(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = if i == j {
                    self[(i, j)] - 1.0
                } else {
                    self[(i, j)]
                };
                s += d.norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    /// `self⁻¹·m·self`.
    pub fn similarity(&self, m: &CMatrix) -> Result<CMatrix, LinalgError> {
        let inv = self.inverse()?;
        Ok(&(&inv * m) * self)
    }

    pub fn inverse(&self) -> Result<CMatrix, LinalgError> {
        self.inverse_with_floor(DEFAULT_SINGULAR_FLOOR)
    }

    /// Inverse by LU with partial pivoting.
    ///
    /// The smallest singular value is bounded below by `1/‖a⁻¹‖_F`; the matrix is
    /// rejected when that bound falls under `floor·‖a‖_F`.
    pub fn inverse_with_floor(&self, floor: f64) -> Result<CMatrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape(format!(
                "inverse of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let scale = self.norm_fro();
        if scale == 0.0 || !scale.is_finite() {
            return Err(LinalgError::SingularMatrix { sigma_min: 0.0 });
        }
        let lu = Lu::factor(self)?;
        let mut inv = Self::zeros(n, n);
        for (i, &p) in lu.perm.iter().enumerate() {
            inv.data[i * n + p] = c(1.0, 0.0);
        }
        lu.solve_in_place(&mut inv.data, n);
        let sigma_lower = 1.0 / inv.norm_fro();
        if !sigma_lower.is_finite() || sigma_lower < floor * scale {
            return Err(LinalgError::SingularMatrix {
                sigma_min: sigma_lower,
            });
        }
        Ok(inv)
    }

    /// Solves `self·x = b` for a matrix right-hand side.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix, LinalgError> {
        if !self.is_square() || self.rows != b.rows {
            return Err(LinalgError::Shape("solve: incompatible shapes".into()));
        }
        let lu = Lu::factor(self)?;
        let mut x = Self::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col = lu.solve_vec(&b.column(j));
            x.set_column(j, &col);
        }
        Ok(x)
    }

    /// Frobenius-norm condition estimate `‖a‖_F·‖a⁻¹‖_F`.
    pub fn condition_fro(&self) -> Result<f64, LinalgError> {
        Ok(self.norm_fro() * self.inverse()?.norm_fro())
    }
}

struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &CMatrix) -> Result<Self, LinalgError> {
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(LinalgError::SingularMatrix { sigma_min: 0.0 });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let t = lu[k * n + j];
                    lu[i * n + j] -= f * t;
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    /// Solves in place for a permuted row-major right-hand side with `cols` columns.
    fn solve_in_place(&self, y: &mut [Complex64], cols: usize) {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                let f = self.lu[i * n + j];
                for col in 0..cols {
                    let t = f * y[j * cols + col];
                    y[i * cols + col] -= t;
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let f = self.lu[i * n + j];
                for col in 0..cols {
                    let t = f * y[j * cols + col];
                    y[i * cols + col] -= t;
                }
            }
            let d = self.lu[i * n + i];
            for col in 0..cols {
                y[i * cols + col] /= d;
            }
        }
    }

    fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[i * n + j] * y[j];
                y[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[i * n + j] * y[j];
                y[i] -= t;
            }
            y[i] /= self.lu[i * n + i];
        }
        y
    }
}

/// Matrix inverse with the default singularity floor.
pub fn mat_inv(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    a.inverse()
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dims(), rhs.dims(), "add: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dims(), rhs.dims(), "sub: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|x| -x)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "mul: shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: CMatrix) -> CMatrix {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: &CMatrix) -> CMatrix {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            let cells: Vec<String> = row
                .iter()
                .map(|x| format!("{:+.6e}{:+.6e}i", x.re, x.im))
                .collect();
            writeln!(f, "  {}", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Serialized as nested rows of `[re, im]` pairs.
impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.row_vecs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        let m = CMatrix::from_rows(&rows).map_err(serde::de::Error::custom)?;
        if !m.is_finite() {
            return Err(serde::de::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}
