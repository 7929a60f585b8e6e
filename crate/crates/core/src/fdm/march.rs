use super::grid::{Grid, SpaceTimeField};
use super::operator::{assemble, SpatialOperator};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `L u = rhs` on full spatial node vectors.
pub fn solve_steady(op: &SpatialOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != op.spatial_len() {
        return Err(Error::Input(format!(
            "right-hand side has {} entries, operator expects {}",
            rhs.len(),
            op.spatial_len()
        )));
    }
    let r = op.to_unknowns(rhs);
    let u = op.solve_shifted(0.0, 1.0, &r)?;
    let mut lu = vec![0.0; u.len()];
    op.apply(&u, &mut lu);
    let defect = lu.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(defect <= 1e-10 * inf_norm(&r).max(1.0)) {
        return Err(Error::Solver(format!("steady solve left a residual of {defect:e}")));
    }
    Ok(op.to_full(&u))
}

fn check_march(op: &SpatialOperator, u0: &[f64], source: Option<&SpaceTimeField>, grid: &Grid) -> Result<()> {
    if grid.is_steady() {
        return Err(Error::Grid("time marching needs a space-time grid".into()));
    }
    if grid.k != op.k || grid.spatial_len() != op.spatial_len() {
        return Err(Error::Grid("operator and grid disagree on the spatial nodes".into()));
    }
    if u0.len() != op.spatial_len() {
        return Err(Error::Input(format!("initial slice has {} nodes, expected {}", u0.len(), op.spatial_len())));
    }
    if let Some(s) = source {
        if &s.grid != grid {
            return Err(Error::Input("source field lives on a different grid".into()));
        }
    }
    Ok(())
}

fn source_slice(op: &SpatialOperator, source: Option<&SpaceTimeField>, n: usize) -> Vec<f64> {
    match source {
        Some(s) => op.to_unknowns(s.slice(n)),
        None => vec![0.0; op.unknowns()],
    }
}

/// Crank–Nicolson march of `∂ₜu = L u − S`:
/// `(I − ½Δt L) uⁿ⁺¹ = (I + ½Δt L) uⁿ − ½Δt (Sⁿ + Sⁿ⁺¹)`.
/// Dirichlet rows are held at zero after the initial slice.
pub fn crank_nicolson_march(
    op: &SpatialOperator,
    u0: &[f64],
    source: Option<&SpaceTimeField>,
    grid: &Grid,
) -> Result<SpaceTimeField> {
    check_march(op, u0, source, grid)?;
    let dt = grid.dt();
    let mut field = SpaceTimeField::zeros(grid);
    field.slice_mut(0).copy_from_slice(u0);

    let mut u = op.to_unknowns(u0);
    let mut lu = vec![0.0; u.len()];
    let mut s_now = source_slice(op, source, 0);
    for n in 0..grid.time_nodes - 1 {
        let s_next = source_slice(op, source, n + 1);
        op.apply_interior(&u, &mut lu);
        let rhs: Vec<f64> = (0..u.len())
            .map(|i| {
                if op.is_dirichlet_row(i) {
                    0.0
                } else {
                    u[i] + 0.5 * dt * lu[i] - 0.5 * dt * (s_now[i] + s_next[i])
                }
            })
            .collect();
        u = op.solve_shifted(1.0, -0.5 * dt, &rhs)?;
        field.slice_mut(n + 1).copy_from_slice(&op.to_full(&u));
        s_now = s_next;
    }
    Ok(field)
}

/// Courant number of the explicit central scheme, `Δt·√ρ(L) / 2`; equals
/// `c·Δt/Δx` for the 1D wave operator.
pub fn courant_number(op: &SpatialOperator, grid: &Grid) -> f64 {
    0.5 * grid.dt() * op.spectral_radius_bound().sqrt()
}

/// Explicit central march of `∂ₜ²u = L u − S` with a Taylor start-up step.
/// Refuses to run when the Courant number exceeds one.
pub fn central_time_march(
    op: &SpatialOperator,
    u0: &[f64],
    v0: &[f64],
    source: Option<&SpaceTimeField>,
    grid: &Grid,
) -> Result<SpaceTimeField> {
    check_march(op, u0, source, grid)?;
    if v0.len() != u0.len() {
        return Err(Error::Input("initial velocity and displacement differ in length".into()));
    }
    let courant = courant_number(op, grid);
    if courant > 1.0 + 1e-12 {
        return Err(Error::Stability { courant });
    }
    let dt = grid.dt();
    let mut field = SpaceTimeField::zeros(grid);
    field.slice_mut(0).copy_from_slice(u0);

    let prev0 = op.to_unknowns(u0);
    let v = op.to_unknowns(v0);
    let mut lu = vec![0.0; prev0.len()];
    let pin = |i: usize, value: f64| if op.is_dirichlet_row(i) { 0.0 } else { value };

    let s = source_slice(op, source, 0);
    op.apply_interior(&prev0, &mut lu);
    let mut now: Vec<f64> = (0..prev0.len())
        .map(|i| pin(i, prev0[i] + dt * v[i] + 0.5 * dt * dt * (lu[i] - s[i])))
        .collect();
    let mut prev = prev0;
    field.slice_mut(1).copy_from_slice(&op.to_full(&now));

    for n in 1..grid.time_nodes - 1 {
        let s = source_slice(op, source, n);
        op.apply_interior(&now, &mut lu);
        let next: Vec<f64> = (0..now.len())
            .map(|i| pin(i, 2.0 * now[i] + dt * dt * (lu[i] - s[i]) - prev[i]))
            .collect();
        field.slice_mut(n + 1).copy_from_slice(&op.to_full(&next));
        prev = std::mem::replace(&mut now, next);
    }
    Ok(field)
}

/// Finite-difference solution of the original problem on `g`.
pub fn solve_ibvp(p: &ProblemSpec, g: &Grid) -> Result<SpaceTimeField> {
    let op = assemble(p, g)?;
    match p.time_order() {
        0 => {
            let rhs = g
                .points()
                .iter()
                .enumerate()
                .map(|(i, pt)| if op.is_dirichlet_row(i) { Ok(0.0) } else { p.source_term(pt) })
                .collect::<Result<Vec<_>>>()?;
            SpaceTimeField::from_values(g, solve_steady(&op, &rhs)?)
        }
        order => {
            let u0: Vec<f64> = (0..g.k).map(|i| p.u0(g.x(i))).collect();
            if order == 1 {
                crank_nicolson_march(&op, &u0, None, g)
            } else {
                central_time_march(&op, &u0, &vec![0.0; g.k], None, g)
            }
        }
    }
}
