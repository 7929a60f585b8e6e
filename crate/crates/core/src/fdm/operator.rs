use super::grid::Grid;
use super::linalg::{conjugate_gradient, cyclic_thomas, thomas};
use crate::error::{Error, Result};
use crate::problems::{BcKind, ProblemId, ProblemSpec};

const CG_MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Tridiagonal,
    CyclicTridiagonal,
    FivePoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryRows {
    /// Dirichlet: boundary rows are identity rows with zero right-hand side.
    Identity,
    /// Periodic: indices wrap, the duplicated endpoint is not an unknown.
    Wrap,
}

/// Discretized spatial operator `L` with constant stencil weights.
///
/// Works in "unknown space": `k` nodes for Dirichlet 1D, `k - 1` for
/// periodic 1D, `k²` for the 2D grid. [`SpatialOperator::to_unknowns`]
/// and [`SpatialOperator::to_full`] convert to and from full node vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialOperator {
    pub kind: OperatorKind,
    pub k: usize,
    pub west: f64,
    pub centre: f64,
    pub east: f64,
    /// Weight of the y-neighbours (five-point stencil only).
    pub north_south: f64,
}

/// Spatial operator `L` of the problem on grid `g`, so that the PDE reads
/// `L u = f` (steady) or `∂ₜᵐ u = L u` (time-dependent).
pub fn assemble(p: &ProblemSpec, g: &Grid) -> Result<SpatialOperator> {
    if g.k < 3 {
        return Err(Error::Grid(format!("need at least 3 nodes per axis, got {}", g.k)));
    }
    if g.dims != p.spatial_dims() || g.is_steady() != p.is_steady() {
        return Err(Error::Grid(format!("grid does not match the {} domain", p.id)));
    }
    let h = g.dx();
    let h2 = h * h;
    let diffusion = |a: f64| (a / h2, -2.0 * a / h2, a / h2);
    let (kind, (west, centre, east), north_south) = match p.id {
        ProblemId::Poisson1d => (OperatorKind::Tridiagonal, diffusion(1.0), 0.0),
        ProblemId::Poisson2d => (OperatorKind::FivePoint, (1.0 / h2, -4.0 / h2, 1.0 / h2), 1.0 / h2),
        ProblemId::Heat => (OperatorKind::Tridiagonal, diffusion(p.alpha), 0.0),
        ProblemId::Wave => (OperatorKind::Tridiagonal, diffusion(p.c * p.c), 0.0),
        ProblemId::DriftDiffusion => {
            let (w, c, e) = diffusion(p.alpha);
            let drift = p.beta / (2.0 * h);
            (OperatorKind::CyclicTridiagonal, (w - drift, c, e + drift), 0.0)
        }
    };
    debug_assert_eq!(kind == OperatorKind::CyclicTridiagonal, p.bc_kind() == BcKind::Periodic);
    Ok(SpatialOperator {
        kind,
        k: g.k,
        west,
        centre,
        east,
        north_south,
    })
}

impl SpatialOperator {
    pub fn boundary(&self) -> BoundaryRows {
        match self.kind {
            OperatorKind::CyclicTridiagonal => BoundaryRows::Wrap,
            _ => BoundaryRows::Identity,
        }
    }

    pub fn unknowns(&self) -> usize {
        match self.kind {
            OperatorKind::Tridiagonal => self.k,
            OperatorKind::CyclicTridiagonal => self.k - 1,
            OperatorKind::FivePoint => self.k * self.k,
        }
    }

    /// Number of nodes in a full spatial slice.
    pub fn spatial_len(&self) -> usize {
        match self.kind {
            OperatorKind::FivePoint => self.k * self.k,
            _ => self.k,
        }
    }

    pub fn is_dirichlet_row(&self, i: usize) -> bool {
        let k = self.k;
        match self.kind {
            OperatorKind::Tridiagonal => i == 0 || i == k - 1,
            OperatorKind::CyclicTridiagonal => false,
            OperatorKind::FivePoint => {
                let (x, y) = (i % k, i / k);
                x == 0 || y == 0 || x == k - 1 || y == k - 1
            }
        }
    }

    pub fn to_unknowns(&self, full: &[f64]) -> Vec<f64> {
        full[..self.unknowns()].to_vec()
    }

    pub fn to_full(&self, unknowns: &[f64]) -> Vec<f64> {
        let mut v = unknowns.to_vec();
        if self.kind == OperatorKind::CyclicTridiagonal {
            v.push(unknowns[0]);
        }
        v
    }

    /// Stencil sum at non-boundary row `i`, reading neighbours from `u`.
    fn stencil(&self, u: &[f64], i: usize) -> f64 {
        let k = self.k;
        match self.kind {
            OperatorKind::Tridiagonal => self.west * u[i - 1] + self.centre * u[i] + self.east * u[i + 1],
            OperatorKind::CyclicTridiagonal => {
                let n = k - 1;
                self.west * u[(i + n - 1) % n] + self.centre * u[i] + self.east * u[(i + 1) % n]
            }
            OperatorKind::FivePoint => {
                self.west * u[i - 1]
                    + self.centre * u[i]
                    + self.east * u[i + 1]
                    + self.north_south * (u[i - k] + u[i + k])
            }
        }
    }

    /// `out = L u` with identity boundary rows.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for i in 0..self.unknowns() {
            out[i] = if self.is_dirichlet_row(i) { u[i] } else { self.stencil(u, i) };
        }
    }

    /// `out = L u` on non-boundary rows, zero on boundary rows.
    pub fn apply_interior(&self, u: &[f64], out: &mut [f64]) {
        for i in 0..self.unknowns() {
            out[i] = if self.is_dirichlet_row(i) { 0.0 } else { self.stencil(u, i) };
        }
    }

    /// Dense matrix of `L` (identity boundary rows) in unknown space.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.unknowns();
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            for i in 0..n {
                m[i][j] = col[i];
            }
            e[j] = 0.0;
        }
        m
    }

    /// Gershgorin bound on the spectral radius of the interior rows.
    pub fn spectral_radius_bound(&self) -> f64 {
        let ns = if self.kind == OperatorKind::FivePoint { 2.0 * self.north_south.abs() } else { 0.0 };
        self.west.abs() + self.centre.abs() + self.east.abs() + ns
    }

    /// Solves `(shift·I + scale·L) x = rhs` on non-boundary rows with
    /// identity boundary rows, all in unknown space.
    pub fn solve_shifted(&self, shift: f64, scale: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.unknowns();
        if rhs.len() != n {
            return Err(Error::Input(format!("right-hand side has {} entries, expected {n}", rhs.len())));
        }
        match self.kind {
            OperatorKind::Tridiagonal | OperatorKind::CyclicTridiagonal => {
                let mut a = vec![scale * self.west; n];
                let mut b = vec![shift + scale * self.centre; n];
                let mut c = vec![scale * self.east; n];
                if self.kind == OperatorKind::CyclicTridiagonal {
                    return cyclic_thomas(&a, &b, &c, rhs);
                }
                for i in [0, n - 1] {
                    a[i] = 0.0;
                    b[i] = 1.0;
                    c[i] = 0.0;
                }
                thomas(&a, &b, &c, rhs)
            }
            OperatorKind::FivePoint => self.solve_five_point(shift, scale, rhs),
        }
    }

    fn solve_five_point(&self, shift: f64, scale: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let k = self.k;
        let m = k - 2;
        // interior eigenvalues of L are negative, so the system is definite
        // when shift and scale·L have the same sign
        let sign = if shift >= 0.0 && scale <= 0.0 && (shift, scale) != (0.0, 0.0) {
            1.0
        } else if shift <= 0.0 && scale >= 0.0 && (shift, scale) != (0.0, 0.0) {
            -1.0
        } else {
            return Err(Error::Solver("shifted five-point system is indefinite".into()));
        };
        let interior = |i: usize| (i / m + 1) * k + i % m + 1;

        // boundary values are known; move their couplings to the right
        let mut known = vec![0.0; k * k];
        for (i, v) in known.iter_mut().enumerate() {
            if self.is_dirichlet_row(i) {
                *v = rhs[i];
            }
        }
        let b: Vec<f64> = (0..m * m)
            .map(|i| {
                let g = interior(i);
                sign * (rhs[g] - scale * self.stencil(&known, g))
            })
            .collect();

        let apply = |x: &[f64], out: &mut [f64]| {
            let mut full = vec![0.0; k * k];
            for (i, v) in x.iter().enumerate() {
                full[interior(i)] = *v;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let g = interior(i);
                *o = sign * (shift * full[g] + scale * self.stencil(&full, g));
            }
        };
        let diag = vec![sign * (shift + scale * self.centre); m * m];
        let rhs_scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let x = conjugate_gradient(apply, &diag, &b, 1e-11 * rhs_scale, CG_MAX_ITER)?;

        for (i, v) in x.into_iter().enumerate() {
            known[interior(i)] = v;
        }
        Ok(known)
    }
}
