//! Residual-based error maps: evaluate `R = D[φ̂]` on a grid, solve the
//! defect equation `D[e] = −R`, and compare against the true error, an FDM
//! reference solution and, for heat, a semigroup bound.

mod bound;
mod metrics;

use std::collections::BTreeMap;
use std::time::Instant;

pub use bound::{certified_bound, gaussian_smooth, integrate_bound, trapezoid_l2, BoundConfig, BoundCurve};
pub use metrics::{euclidean_distance, slice_l2, slice_l2_curve, MetricsFile, SliceCurves};

use crate::error::Result;
use crate::fdm::{assemble, central_time_march, crank_nicolson_march, solve_ibvp, solve_steady, Grid, SpaceTimeField};
use crate::problems::{Approximation, ProblemId, ProblemSpec};

/// `R = D[φ̂]` at every node of `g`.
pub fn evaluate_residual(net: &dyn Approximation, g: &Grid) -> Result<SpaceTimeField> {
    SpaceTimeField::from_values(g, net.residuals(&g.points())?)
}

/// `φ̂` at every node of `g`.
pub fn network_values(net: &dyn Approximation, g: &Grid) -> Result<SpaceTimeField> {
    SpaceTimeField::from_values(g, net.values(&g.points())?)
}

/// Solves `D[e] = −R` with zero initial and boundary data on the grid of `r`.
pub fn solve_defect(p: &ProblemSpec, r: &SpaceTimeField) -> Result<SpaceTimeField> {
    let g = &r.grid;
    let op = assemble(p, g)?;
    let zeros = vec![0.0; g.spatial_len()];
    match p.time_order() {
        0 => {
            let rhs: Vec<f64> = r
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| if op.is_dirichlet_row(i) { 0.0 } else { -v })
                .collect();
            SpaceTimeField::from_values(g, solve_steady(&op, &rhs)?)
        }
        1 => crank_nicolson_march(&op, &zeros, Some(r), g),
        _ => central_time_march(&op, &zeros, &zeros, Some(r), g),
    }
}

/// `e_true = u − φ̂`.
pub fn true_error(net: &dyn Approximation, g: &Grid) -> Result<SpaceTimeField> {
    let p = net.problem();
    let pts = g.points();
    let phi = net.values(&pts)?;
    let values = pts
        .iter()
        .zip(phi)
        .map(|(pt, v)| Ok(p.analytic_solution(pt)? - v))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::from_values(g, values)
}

/// `e_FDM = u_FDM − φ̂` with `u_FDM` the finite-difference solution on `g`.
pub fn fdm_baseline_error(net: &dyn Approximation, g: &Grid) -> Result<SpaceTimeField> {
    solve_ibvp(net.problem(), g)?.sub(&network_values(net, g)?)
}

/// Which estimates to compute; the FDM reference solve only runs when asked for.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Estimators {
    pub res: bool,
    pub fdm: bool,
    pub bound: Option<BoundConfig>,
}

impl Estimators {
    pub fn all() -> Self {
        Self {
            res: true,
            fdm: true,
            bound: Some(BoundConfig::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub problem: ProblemId,
    pub grid: Grid,
    pub e_true: SpaceTimeField,
    pub residual: Option<SpaceTimeField>,
    pub e_res: Option<SpaceTimeField>,
    pub e_fdm: Option<SpaceTimeField>,
    pub bound: Option<BoundCurve>,
    /// Wall time of each stage in seconds.
    pub runtime_seconds: BTreeMap<String, f64>,
}

impl ErrorReport {
    pub fn l2_true_res(&self) -> Result<Option<f64>> {
        self.e_res.as_ref().map(|e| euclidean_distance(&self.e_true, e)).transpose()
    }

    pub fn l2_true_fdm(&self) -> Result<Option<f64>> {
        self.e_fdm.as_ref().map(|e| euclidean_distance(&self.e_true, e)).transpose()
    }

    /// Per-time spatial L2 curves of every error field present.
    pub fn curves(&self) -> SliceCurves {
        SliceCurves {
            t: (0..self.grid.time_slices()).map(|n| self.grid.t(n)).collect(),
            e_true: slice_l2_curve(&self.e_true),
            e_res: self.e_res.as_ref().map(slice_l2_curve),
            e_fdm: self.e_fdm.as_ref().map(slice_l2_curve),
        }
    }
}

/// Runs the requested estimators for `net` on `g`. The bound is sampled at
/// every time node of the grid.
pub fn estimate(net: &dyn Approximation, g: &Grid, which: &Estimators) -> Result<ErrorReport> {
    let mut runtime = BTreeMap::new();
    let mut timed = |name: &str, start: Instant| {
        runtime.insert(name.to_string(), start.elapsed().as_secs_f64());
    };

    let start = Instant::now();
    let e_true = true_error(net, g)?;
    timed("true_error", start);

    let (mut residual, mut e_res) = (None, None);
    if which.res {
        let start = Instant::now();
        let r = evaluate_residual(net, g)?;
        timed("residual", start);
        let start = Instant::now();
        e_res = Some(solve_defect(net.problem(), &r)?);
        timed("defect_solve", start);
        residual = Some(r);
    }

    let e_fdm = if which.fdm {
        let start = Instant::now();
        let e = fdm_baseline_error(net, g)?;
        timed("fdm_baseline", start);
        Some(e)
    } else {
        None
    };

    let bound = match &which.bound {
        Some(cfg) => {
            let start = Instant::now();
            let times: Vec<f64> = (0..g.time_slices()).map(|n| g.t(n)).collect();
            let curve = certified_bound(net, cfg, g.k, &times)?;
            timed("bound", start);
            Some(curve)
        }
        None => None,
    };

    Ok(ErrorReport {
        problem: net.problem().id,
        grid: g.clone(),
        e_true,
        residual,
        e_res,
        e_fdm,
        bound,
        runtime_seconds: runtime,
    })
}
