//! Semigroup error bound for the heat problem, integrated as a scalar ODE.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{Approximation, Point, ProblemId};

fn default_sigma() -> f64 {
    0.0
}
fn default_truncate() -> f64 {
    4.0
}
fn default_rtol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    /// Gaussian width in units of the spatial spacing; 0 uses the raw
    /// residual, which keeps the bound rigorous.
    #[serde(default = "default_sigma")]
    pub sigma_cells: f64,
    /// Kernel half-width in units of sigma.
    #[serde(default = "default_truncate")]
    pub truncate: f64,
    /// Spatial nodes used for the residual norm; defaults to the grid's.
    #[serde(default)]
    pub spatial_k: Option<usize>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            sigma_cells: default_sigma(),
            truncate: default_truncate(),
            spatial_k: None,
            rtol: default_rtol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    /// `(t, b(t))` pairs in the order requested.
    pub points: Vec<(f64, f64)>,
    /// Accepted adaptive steps.
    pub steps: usize,
}

/// Discrete Gaussian convolution with reflection about the end nodes.
pub fn gaussian_smooth(values: &[f64], sigma_nodes: f64, truncate: f64) -> Vec<f64> {
    let n = values.len();
    if sigma_nodes <= 0.0 || n < 2 {
        return values.to_vec();
    }
    let radius = (truncate * sigma_nodes).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|j| (-((j * j) as f64) / (2.0 * sigma_nodes * sigma_nodes)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let last = (n - 1) as isize;
    let reflect = |mut i: isize| {
        while i < 0 || i > last {
            i = if i < 0 { -i } else { 2 * last - i };
        }
        i as usize
    };
    (0..n as isize)
        .map(|i| {
            kernel
                .iter()
                .zip(-radius..=radius)
                .map(|(w, j)| w * values[reflect(i + j)])
                .sum::<f64>()
                / norm
        })
        .collect()
}

/// Continuous L2 norm on `[0, 1]` by the trapezoid rule over uniform nodes.
pub fn trapezoid_l2(values: &[f64]) -> f64 {
    let n = values.len();
    let h = 1.0 / (n - 1) as f64;
    let inner: f64 = values[1..n - 1].iter().map(|v| v * v).sum();
    let ends = 0.5 * (values[0] * values[0] + values[n - 1] * values[n - 1]);
    (h * (inner + ends)).sqrt()
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `b' = ω b + ρ(t)`, `b(0) = 0` with adaptive Dormand–Prince
/// 5(4) and returns `b` at each of the ascending `times`.
pub fn integrate_bound<F>(omega: f64, mut rho: F, times: &[f64], rtol: f64) -> Result<BoundCurve>
where
    F: FnMut(f64) -> Result<f64>,
{
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Input("bound times must be non-negative and ascending".into()));
    }
    let atol = 1e-12;
    let mut t = 0.0;
    let mut b = 0.0;
    let mut h = 1e-2;
    let mut steps = 0;
    let mut points = Vec::with_capacity(times.len());
    let mut k = [0.0; 7];
    let mut k0 = omega * b + rho(t)?;
    for &target in times {
        while t < target {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            k[0] = k0;
            for s in 1..7 {
                let bs = b + step * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
                let ts = if last && C[s] == 1.0 { target } else { t + C[s] * step };
                k[s] = omega * bs + rho(ts)?;
            }
            let b5 = b + step * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
            let b4 = b + step * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
            let err = (b5 - b4).abs() / (atol + rtol * b.abs().max(b5.abs()));
            if !err.is_finite() {
                return Err(Error::Solver("bound integration produced a non-finite value".into()));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + step };
                b = b5;
                k0 = k[6];
                steps += 1;
                if !last || factor > 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor;
                if h < 1e-14 {
                    return Err(Error::Solver("bound integration step size underflow".into()));
                }
            }
        }
        points.push((target, b));
    }
    Ok(BoundCurve { points, steps })
}

/// Semigroup bound `b(t) ≥ ‖e(·, t)‖₂` for the heat problem: `M = 1`,
/// `ω = −απ²`, source the spatial L2 norm of the smoothed residual.
pub fn certified_bound(net: &dyn Approximation, cfg: &BoundConfig, spatial_k: usize, times: &[f64]) -> Result<BoundCurve> {
    let p = net.problem();
    if p.id != ProblemId::Heat {
        return Err(Error::Unsupported(format!("the certified bound is only available for heat, not {}", p.id)));
    }
    let k = cfg.spatial_k.unwrap_or(spatial_k);
    if k < 3 {
        return Err(Error::Grid(format!("bound needs at least 3 spatial nodes, got {k}")));
    }
    let omega = -p.alpha * PI * PI;
    let xs: Vec<f64> = (0..k).map(|i| if i + 1 == k { 1.0 } else { i as f64 / (k - 1) as f64 }).collect();
    let rho = |t: f64| -> Result<f64> {
        let t = t.min(p.t_max);
        let pts: Vec<Point> = xs.iter().map(|&x| Point::space_time(x, t)).collect();
        let r = net.residuals(&pts)?;
        Ok(trapezoid_l2(&gaussian_smooth(&r, cfg.sigma_cells, cfg.truncate)))
    };
    integrate_bound(omega, rho, times, cfg.rtol)
}
