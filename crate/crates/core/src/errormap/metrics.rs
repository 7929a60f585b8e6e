use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::{Grid, SpaceTimeField};
use crate::problems::ProblemId;

/// Plain Euclidean norm of `a − b` over all grid nodes.
pub fn euclidean_distance(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Input("cannot compare fields on different grids".into()));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Continuous spatial L2 norm of one slice (tensor trapezoid rule).
pub fn slice_l2(grid: &Grid, slice: &[f64]) -> f64 {
    let k = grid.k;
    let h = grid.dx();
    let w = |i: usize| if i == 0 || i == k - 1 { 0.5 } else { 1.0 };
    let sum: f64 = slice
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let weight = if grid.dims == 1 { w(idx) * h } else { w(idx % k) * w(idx / k) * h * h };
            weight * v * v
        })
        .sum();
    sum.sqrt()
}

pub fn slice_l2_curve(field: &SpaceTimeField) -> Vec<f64> {
    (0..field.grid.time_slices()).map(|n| slice_l2(&field.grid, field.slice(n))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCurves {
    pub t: Vec<f64>,
    pub e_true: Vec<f64>,
    pub e_res: Option<Vec<f64>>,
    pub e_fdm: Option<Vec<f64>>,
}

/// Contents of `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsFile {
    pub problem: ProblemId,
    pub grid: Grid,
    pub seed: u64,
    pub config: serde_json::Value,
    /// `‖e_true − e_res‖₂` over grid nodes.
    pub l2_true_res: Option<f64>,
    /// `‖e_true − e_FDM‖₂` over grid nodes.
    pub l2_true_fdm: Option<f64>,
    pub bound_curve: Option<Vec<(f64, f64)>>,
    pub bound_steps: Option<usize>,
    pub l2_curves: SliceCurves,
    /// Absent in deterministic output.
    pub runtime_seconds: Option<BTreeMap<String, f64>>,
}
