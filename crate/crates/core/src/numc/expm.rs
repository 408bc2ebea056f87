//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use super::{CMatrix, LinalgError};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

pub fn mat_expm(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::Shape("expm of a non-square matrix".into()));
    }
    let n = a.rows();
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale_real(2f64.powi(-squarings));

    let b = &PADE13;
    let id = CMatrix::identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let lincomb = |terms: &[(f64, &CMatrix)]| {
        terms
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (w, m)| &acc + &m.scale_real(*w))
    };
    let u_inner = &a6 * &lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u_poly = &u_inner + &lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)]);
    let u = &scaled * &u_poly;
    let v_inner = &a6 * &lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v = &v_inner + &lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);

    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}
