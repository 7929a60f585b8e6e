use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{Point, ProblemSpec};

/// Uniform node grid on `[0, 1]^dims`, optionally times `[0, t_max]`.
///
/// Both end nodes are included on every axis, so `k` nodes give
/// `dx = 1 / (k - 1)` and `time_nodes` nodes give `dt = t_max / (time_nodes - 1)`.
/// `time_nodes == 0` marks a steady grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: usize,
    pub k: usize,
    pub time_nodes: usize,
    pub t_max: f64,
}

impl Grid {
    pub fn steady(dims: usize, k: usize) -> Result<Self> {
        let g = Self {
            dims,
            k,
            time_nodes: 0,
            t_max: 0.0,
        };
        g.check()?;
        Ok(g)
    }

    pub fn space_time(k: usize, time_nodes: usize, t_max: f64) -> Result<Self> {
        if time_nodes < 2 {
            return Err(Error::Grid(format!("need at least 2 time nodes, got {time_nodes}")));
        }
        if !(t_max > 0.0) {
            return Err(Error::Grid(format!("t_max must be positive, got {t_max}")));
        }
        let g = Self {
            dims: 1,
            k,
            time_nodes,
            t_max,
        };
        g.check()?;
        Ok(g)
    }

    /// Grid matching the problem's domain; `time_nodes` is ignored for
    /// steady problems.
    pub fn for_problem(p: &ProblemSpec, k: usize, time_nodes: usize) -> Result<Self> {
        if p.is_steady() {
            Self::steady(p.spatial_dims(), k)
        } else {
            Self::space_time(k, time_nodes, p.t_max)
        }
    }

    fn check(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes per axis, got {}", self.k)));
        }
        if !(1..=2).contains(&self.dims) {
            return Err(Error::Grid(format!("only 1 or 2 spatial dimensions, got {}", self.dims)));
        }
        Ok(())
    }

    pub fn is_steady(&self) -> bool {
        self.time_nodes == 0
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.k - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        if self.is_steady() {
            0.0
        } else {
            self.t_max / (self.time_nodes - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.k {
            1.0
        } else {
            i as f64 * self.dx()
        }
    }

    pub fn t(&self, n: usize) -> f64 {
        if n + 1 == self.time_nodes {
            self.t_max
        } else {
            n as f64 * self.dt()
        }
    }

    pub fn spatial_len(&self) -> usize {
        self.k.pow(self.dims as u32)
    }

    pub fn time_slices(&self) -> usize {
        self.time_nodes.max(1)
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.time_slices()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spatial points of one slice, `x` fastest.
    pub fn spatial_points(&self, t: Option<f64>) -> Vec<Point> {
        let xs: Vec<f64> = (0..self.k).map(|i| self.x(i)).collect();
        match (self.dims, t) {
            (1, Some(t)) => xs.iter().map(|&x| Point::space_time(x, t)).collect(),
            (1, None) => xs.iter().map(|&x| Point::line(x)).collect(),
            _ => xs.iter().flat_map(|&y| xs.iter().map(move |&x| Point::plane(x, y))).collect(),
        }
    }

    /// Every node in storage order (time outermost).
    pub fn points(&self) -> Vec<Point> {
        if self.is_steady() {
            self.spatial_points(None)
        } else {
            (0..self.time_nodes).flat_map(|n| self.spatial_points(Some(self.t(n)))).collect()
        }
    }

    /// Index of the time node closest to `t` (ties go to the earlier node).
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let n = (t / self.dt()).round().clamp(0.0, (self.time_nodes - 1) as f64) as usize;
        if n > 0 && (self.t(n - 1) - t).abs() <= (self.t(n) - t).abs() + 1e-9 * self.dt() {
            n - 1
        } else {
            n
        }
    }
}

/// Values on every node of a grid, stored `[time][y][x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let s = self.grid.spatial_len();
        &self.values[n * s..(n + 1) * s]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        let s = self.grid.spatial_len();
        &mut self.values[n * s..(n + 1) * s]
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &SpaceTimeField, f: impl Fn(f64, f64) -> f64) -> Result<SpaceTimeField> {
        if self.grid != other.grid {
            return Err(Error::Input("fields live on different grids".into()));
        }
        Ok(SpaceTimeField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn header(&self) -> &'static str {
        match (self.grid.is_steady(), self.grid.dims) {
            (true, 1) => "x,value",
            (true, _) => "x,y,value",
            (false, 1) => "t,x,value",
            (false, _) => "t,x,y,value",
        }
    }

    /// CSV with a `t,x[,y],value` header (steady grids omit `t`), time
    /// outermost, every real with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut out = String::with_capacity(self.values.len() * 72);
        out.push_str(self.header());
        out.push('\n');
        let mut idx = 0;
        for n in 0..g.time_slices() {
            for pt in g.spatial_points((!g.is_steady()).then(|| g.t(n))) {
                if let Some(t) = pt.t {
                    let _ = write!(out, "{t:.16e},");
                }
                let _ = write!(out, "{:.16e},", pt.x);
                if let Some(y) = pt.y {
                    let _ = write!(out, "{y:.16e},");
                }
                let _ = writeln!(out, "{:.16e}", self.values[idx]);
                idx += 1;
            }
        }
        out
    }

    /// Parses [`SpaceTimeField::to_csv`] output for a known grid; node
    /// coordinates must match the grid.
    pub fn from_csv(grid: &Grid, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let expected = Self::zeros(grid);
        let header = lines.next().unwrap_or_default();
        if header != expected.header() {
            return Err(Error::Input(format!("unexpected CSV header {header:?}")));
        }
        let points = grid.points();
        let mut values = Vec::with_capacity(grid.len());
        for (line_no, (line, pt)) in lines.zip(&points).enumerate() {
            let fields = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Input(format!("CSV line {}: {e}", line_no + 2)))?;
            let coords: Vec<f64> = pt.t.into_iter().chain([pt.x]).chain(pt.y).collect();
            if fields.len() != coords.len() + 1 || coords.iter().zip(&fields).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(Error::Input(format!("CSV line {} does not match the grid", line_no + 2)));
            }
            values.push(fields[coords.len()]);
        }
        Self::from_values(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spacing_and_nodes() {
        let g = Grid::space_time(64, 64, 1.0).unwrap();
        assert_eq!(g.dx(), 1.0 / 63.0);
        assert_eq!(g.dt(), 1.0 / 63.0);
        assert_eq!(g.x(63), 1.0);
        assert_eq!(g.t(63), 1.0);
        assert_eq!(g.len(), 64 * 64);
        assert_eq!(Grid::steady(2, 5).unwrap().len(), 25);
        assert!(matches!(Grid::steady(1, 2), Err(Error::Grid(_))));
        assert!(matches!(Grid::space_time(5, 1, 1.0), Err(Error::Grid(_))));
    }

    #[test]
    fn nearest_time_nodes() {
        let g = Grid::space_time(64, 64, 1.0).unwrap();
        assert_eq!(g.nearest_time_index(1.0), 63);
        assert_eq!(g.nearest_time_index(0.0), 0);
        // 0.25 * 63 = 15.75
        assert_eq!(g.nearest_time_index(0.25), 16);
        assert_eq!(g.nearest_time_index(0.5), 31);
    }

    #[test]
    fn csv_layout() {
        let g = Grid::steady(2, 3).unwrap();
        let f = SpaceTimeField::from_values(&g, (0..9).map(f64::from).collect()).unwrap();
        let csv = f.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(
            lines.nth(1),
            Some("5.0000000000000000e-1,0.0000000000000000e0,1.0000000000000000e0")
        );
        let g1 = Grid::space_time(3, 2, 1.0).unwrap();
        assert!(SpaceTimeField::zeros(&g1).to_csv().starts_with("t,x,value\n"));
    }

    #[test]
    fn csv_rejects_wrong_grid() {
        let g = Grid::space_time(5, 3, 1.0).unwrap();
        let csv = SpaceTimeField::zeros(&g).to_csv();
        let other = Grid::space_time(5, 4, 1.0).unwrap();
        assert!(SpaceTimeField::from_csv(&other, &csv).is_err());
        let g2 = Grid::space_time(6, 3, 1.0).unwrap();
        assert!(SpaceTimeField::from_csv(&g2, &csv).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(values in proptest::collection::vec(-1e6f64..1e6, 5 * 4)) {
            let g = Grid::space_time(5, 4, 1.0).unwrap();
            let f = SpaceTimeField::from_values(&g, values).unwrap();
            let back = SpaceTimeField::from_csv(&g, &f.to_csv()).unwrap();
            prop_assert!(f.values.iter().zip(&back.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
