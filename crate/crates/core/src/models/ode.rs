//! Dormand-Prince 5(4) integration of `dT/dt = L(t) T`.

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Solves `dY/dt = rhs(t) Y` from `Y(t0) = y0` to `t1` with local error
/// control `atol = rtol = tol`.
pub fn solve_linear<F>(rhs: F, y0: RealMatrix, t0: f64, t1: f64, tol: f64) -> Result<RealMatrix>
where
    F: Fn(f64) -> Result<RealMatrix>,
{
    if t1 < t0 {
        return Err(Error::OrderingViolated(format!("integration end {t1} precedes start {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    if t1 == t0 {
        return Ok(y);
    }
    let span = t1 - t0;
    let h_min = 1e-14 * span.max(1.0);
    let mut h = (span * 0.01).min(0.1).max(h_min);
    let mut k: Vec<RealMatrix> = Vec::with_capacity(7);
    while t < t1 {
        h = h.min(t1 - t);
        k.clear();
        for stage in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[stage][j] != 0.0 {
                    ys += kj * (h * A[stage][j]);
                }
            }
            let l = rhs(t + C[stage] * h)?;
            if l.iter().any(|x| !x.is_finite()) {
                return Err(Error::IntegrationFailure {
                    last_time: t,
                    reason: format!("generator is not finite at t = {}", t + C[stage] * h),
                });
            }
            k.push(l * ys);
        }
        let mut y5 = y.clone();
        let mut err = RealMatrix::zeros(y.nrows(), y.ncols());
        for s in 0..7 {
            y5 += &k[s] * (h * B5[s]);
            err += &k[s] * (h * (B5[s] - B4[s]));
        }
        let ratio = err
            .iter()
            .zip(y.iter().zip(y5.iter()))
            .map(|(e, (a, b))| e.abs() / (tol + tol * a.abs().max(b.abs())))
            .fold(0.0, f64::max);
        if ratio <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < h_min && t < t1 {
            return Err(Error::IntegrationFailure {
                last_time: t,
                reason: "step size underflow".into(),
            });
        }
    }
    Ok(y)
}
