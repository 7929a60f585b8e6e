//! Banded and iterative solvers used by the finite-difference operators.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-14;

fn scale_of(values: &[&[f64]]) -> f64 {
    values
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE)
}

/// Thomas algorithm for `a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = r[i]`.
/// `a[0]` and `c[n-1]` are ignored.
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || c.len() != n || r.len() != n {
        return Err(Error::Input("tridiagonal bands and right-hand side differ in length".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let tol = PIVOT_TOL * scale_of(&[a, b, c]);
    let mut gam = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = b[0];
    if bet.abs() < tol {
        return Err(Error::Solver("zero pivot in tridiagonal solve at row 0".into()));
    }
    x[0] = r[0] / bet;
    for i in 1..n {
        gam[i] = c[i - 1] / bet;
        bet = b[i] - a[i] * gam[i];
        if bet.abs() < tol {
            return Err(Error::Solver(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        x[i] = (r[i] - a[i] * x[i - 1]) / bet;
    }
    for i in (0..n - 1).rev() {
        x[i] -= gam[i + 1] * x[i + 1];
    }
    Ok(x)
}

/// Cyclic tridiagonal solve: like [`thomas`] but `a[0]` couples row 0 to
/// `x[n-1]` and `c[n-1]` couples row `n-1` to `x[0]`. Sherman–Morrison
/// around two Thomas solves.
pub fn cyclic_thomas(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || c.len() != n || r.len() != n {
        return Err(Error::Input("cyclic bands and right-hand side differ in length".into()));
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => {
            let d = a[0] + b[0] + c[0];
            if d.abs() < PIVOT_TOL * scale_of(&[a, b, c]) {
                return Err(Error::Solver("singular 1x1 cyclic system".into()));
            }
            return Ok(vec![r[0] / d]);
        }
        2 => {
            // both wrap entries land on the single off-diagonal
            let (m00, m01, m10, m11) = (b[0], a[0] + c[0], a[1] + c[1], b[1]);
            let det = m00 * m11 - m01 * m10;
            if det.abs() < PIVOT_TOL * scale_of(&[a, b, c]).powi(2) {
                return Err(Error::Solver("singular 2x2 cyclic system".into()));
            }
            return Ok(vec![(r[0] * m11 - m01 * r[1]) / det, (m00 * r[1] - m10 * r[0]) / det]);
        }
        _ => {}
    }
    let top_right = a[0];
    let bottom_left = c[n - 1];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - top_right * bottom_left / gamma;

    let y = thomas(a, &bb, c, r)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = bottom_left;
    let z = thomas(a, &bb, c, &u)?;

    let ratio = top_right / gamma;
    let denom = 1.0 + z[0] + ratio * z[n - 1];
    if denom.abs() < PIVOT_TOL {
        return Err(Error::Solver("singular cyclic system (Sherman-Morrison denominator vanished)".into()));
    }
    let factor = (y[0] + ratio * y[n - 1]) / denom;
    Ok(y.iter().zip(&z).map(|(y, z)| y - factor * z).collect())
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator. Stops once the true residual satisfies
/// `‖A x - b‖∞ ≤ tol_inf`.
pub fn conjugate_gradient<A>(apply: A, diag: &[f64], b: &[f64], tol_inf: f64, max_iter: usize) -> Result<Vec<f64>>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if inf(&r) <= tol_inf {
        return Ok(x);
    }
    let mut ap = vec![0.0; n];
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Solver("conjugate gradient breakdown: operator not positive definite".into()));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if inf(&r) <= 0.5 * tol_inf {
            // confirm against the true residual before accepting
            apply(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            if inf(&r) <= tol_inf {
                return Ok(x);
            }
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("conjugate gradient did not converge in {max_iter} iterations")))
}
