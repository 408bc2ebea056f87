//! Fixed-step classical Runge–Kutta for linear matrix equations `Y′ = A(t)·Y` on `[0, 1]`.

use crate::error::Result;
use crate::numc::CMatrix;

/// Integrates `Y′ = A(t)·Y`, `Y(0) = y0`, with `steps` RK4 steps.
///
/// `generator` is called exactly at `t_i`, `t_i + h/2` and `t_i + h`; the value at the
/// end of a step is reused as the start of the next one.
pub fn rk4_linear(
    mut generator: impl FnMut(f64) -> Result<CMatrix>,
    y0: CMatrix,
    steps: usize,
) -> Result<CMatrix> {
    let h = 1.0 / steps as f64;
    let mut y = y0;
    let mut a_start = generator(0.0)?;
    for i in 0..steps {
        let t = i as f64 * h;
        let t_end = if i + 1 == steps { 1.0 } else { (i + 1) as f64 * h };
        let a_mid = generator(t + 0.5 * h)?;
        let a_end = generator(t_end)?;
        let k1 = &a_start * &y;
        let k2 = &a_mid * &(&y + &k1.scale_real(0.5 * h));
        let k3 = &a_mid * &(&y + &k2.scale_real(0.5 * h));
        let k4 = &a_end * &(&y + &k3.scale_real(h));
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
        y = &y + &incr.scale_real(h / 6.0);
        a_start = a_end;
    }
    Ok(y)
}
