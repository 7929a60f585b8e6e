use std::f64::consts::PI;

use errmap_core::fdm::{
    assemble, central_time_march, courant_number, crank_nicolson_march, linalg, solve_ibvp, solve_steady, Grid,
    SpaceTimeField,
};
use errmap_core::problems::{ProblemId, ProblemSpec};
use errmap_core::Error;

/// Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn slope(ks: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ks.iter().map(|&k| (1.0 / (k - 1) as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

#[test]
fn banded_solvers_match_dense_oracle() {
    for k in 3..=16 {
        for (id, shift, scale) in [
            (ProblemId::Poisson1d, 0.0, 1.0),
            (ProblemId::Heat, 1.0, -0.01),
            (ProblemId::DriftDiffusion, 1.0, -0.01),
            (ProblemId::Wave, 0.0, 1.0),
        ] {
            let p = ProblemSpec::new(id);
            let op = assemble(&p, &Grid::for_problem(&p, k, 4).unwrap()).unwrap();
            let n = op.unknowns();
            let mut a = op.to_dense();
            for (i, row) in a.iter_mut().enumerate() {
                if !op.is_dirichlet_row(i) {
                    for v in row.iter_mut() {
                        *v *= scale;
                    }
                    row[i] += shift;
                }
            }
            let r = pseudo_random(n, k as u64);
            let want = dense_solve(a, r.clone());
            let got = op.solve_shifted(shift, scale, &r).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{id} k={k}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn five_point_matches_dense_oracle() {
    let p = ProblemSpec::new(ProblemId::Poisson2d);
    let op = assemble(&p, &Grid::steady(2, 7).unwrap()).unwrap();
    let r = pseudo_random(49, 3);
    let want = dense_solve(op.to_dense(), r.clone());
    let got = op.solve_shifted(0.0, 1.0, &r).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-10 * w.abs().max(1.0));
    }
}

#[test]
fn stencils_are_exact_on_quadratics() {
    let q = |x: f64| x * (1.0 - x) + 0.3 * x;
    for id in [ProblemId::Poisson1d, ProblemId::Heat, ProblemId::Wave, ProblemId::DriftDiffusion] {
        let p = ProblemSpec::new(id);
        let g = Grid::for_problem(&p, 11, 4).unwrap();
        let op = assemble(&p, &g).unwrap();
        let u: Vec<f64> = (0..op.unknowns()).map(|i| q(g.x(i))).collect();
        let mut lu = vec![0.0; u.len()];
        op.apply_interior(&u, &mut lu);
        // second derivative -2 times the diffusion weight, plus drift times q'
        let (diff, drift) = match id {
            ProblemId::Poisson1d => (1.0, 0.0),
            ProblemId::Heat => (p.alpha, 0.0),
            ProblemId::Wave => (p.c * p.c, 0.0),
            _ => (p.alpha, p.beta),
        };
        for i in 1..op.unknowns() - 1 {
            let x = g.x(i);
            let want = -2.0 * diff + drift * (1.0 - 2.0 * x + 0.3);
            assert!((lu[i] - want).abs() < 1e-9, "{id} node {i}: {} vs {want}", lu[i]);
        }
    }
}

#[test]
fn homogeneous_steady_solve_is_zero() {
    let p = ProblemSpec::new(ProblemId::Poisson2d);
    let op = assemble(&p, &Grid::steady(2, 9).unwrap()).unwrap();
    assert!(solve_steady(&op, &vec![0.0; 81]).unwrap().iter().all(|v| *v == 0.0));
}

fn ibvp_error(id: ProblemId, k: usize) -> f64 {
    let p = ProblemSpec::new(id);
    let g = Grid::for_problem(&p, k, k).unwrap();
    let u = solve_ibvp(&p, &g).unwrap();
    g.points()
        .iter()
        .zip(&u.values)
        .map(|(pt, v)| (p.analytic_solution(pt).unwrap() - v).abs())
        .fold(0.0, f64::max)
}

#[test]
fn all_benchmarks_converge_at_second_order() {
    let ks = [17, 33, 65, 129];
    for id in ProblemId::ALL {
        let ks: &[usize] = if id == ProblemId::Poisson2d { &ks[..3] } else { &ks };
        let errs: Vec<f64> = ks.iter().map(|&k| ibvp_error(id, k)).collect();
        let s = slope(ks, &errs);
        assert!((1.8..=2.2).contains(&s), "{id}: slope {s}, errors {errs:?}");
    }
}

#[test]
fn steady_1d_solution_is_close_at_k65() {
    assert!(ibvp_error(ProblemId::Poisson1d, 65) < 2e-3);
}

#[test]
fn heat_initial_slice_is_copied() {
    let p = ProblemSpec::new(ProblemId::Heat);
    let g = Grid::for_problem(&p, 64, 64).unwrap();
    let u = solve_ibvp(&p, &g).unwrap();
    for i in 0..64 {
        assert_eq!(u.slice(0)[i], p.u0(g.x(i)));
    }
    for n in 1..64 {
        assert_eq!(u.slice(n)[0], 0.0);
        assert_eq!(u.slice(n)[63], 0.0);
    }
}

#[test]
fn periodic_endpoints_agree() {
    let p = ProblemSpec::new(ProblemId::DriftDiffusion);
    let g = Grid::for_problem(&p, 64, 64).unwrap();
    let u = solve_ibvp(&p, &g).unwrap();
    for n in 1..64 {
        assert_eq!(u.slice(n)[0].to_bits(), u.slice(n)[63].to_bits());
    }
}

#[test]
fn marches_without_dynamics_are_identities() {
    let p = ProblemSpec::new(ProblemId::Heat);
    let g = Grid::for_problem(&p, 9, 6).unwrap();
    let mut op = assemble(&p, &g).unwrap();
    op.west = 0.0;
    op.centre = 0.0;
    op.east = 0.0;
    // nonzero boundary values would be pinned, so use a profile vanishing there
    let u0: Vec<f64> = (0..9).map(|i| (PI * g.x(i)).sin()).collect();
    let mut u0b = u0.clone();
    u0b[0] = 0.0;
    u0b[8] = 0.0;
    let cn = crank_nicolson_march(&op, &u0b, None, &g).unwrap();
    let ct = central_time_march(&op, &u0b, &[0.0; 9], None, &g).unwrap();
    for n in 0..6 {
        assert_eq!(cn.slice(n), &u0b[..]);
        assert_eq!(ct.slice(n), &u0b[..]);
    }
}

fn manufactured_heat_error(k: usize) -> f64 {
    // w = 0.1 t sin(πx), source S = -(w_t - α w_xx)
    let p = ProblemSpec::new(ProblemId::Heat);
    let g = Grid::for_problem(&p, k, k).unwrap();
    let op = assemble(&p, &g).unwrap();
    let w = |x: f64, t: f64| 0.1 * t * (PI * x).sin();
    let d = |x: f64, t: f64| 0.1 * (PI * x).sin() * (1.0 + p.alpha * PI * PI * t);
    let pts = g.points();
    let s = SpaceTimeField::from_values(&g, pts.iter().map(|pt| -d(pt.x, pt.t.unwrap())).collect()).unwrap();
    let u = crank_nicolson_march(&op, &vec![0.0; k], Some(&s), &g).unwrap();
    pts.iter()
        .zip(&u.values)
        .map(|(pt, v)| (v - w(pt.x, pt.t.unwrap())).abs())
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_source_is_recovered() {
    let ks = [17, 33, 65];
    let errs: Vec<f64> = ks.iter().map(|&k| manufactured_heat_error(k)).collect();
    assert!(errs[2] < 1e-4, "{errs:?}");
    let s = slope(&ks, &errs);
    assert!((1.8..=2.2).contains(&s), "slope {s}");
}

#[test]
fn cfl_is_checked() {
    let p = ProblemSpec::new(ProblemId::Wave);
    let g = Grid::for_problem(&p, 64, 64).unwrap();
    let op = assemble(&p, &g).unwrap();
    assert!((courant_number(&op, &g) - 0.5).abs() < 1e-12);
    assert!(solve_ibvp(&p, &g).is_ok());

    // c·Δt/Δx = 0.5 · (1/31) / (1/63) = 63/62 > 1
    let g32 = Grid::for_problem(&p, 64, 32).unwrap();
    match solve_ibvp(&p, &g32) {
        Err(Error::Stability { courant }) => assert!((courant - 63.0 / 62.0).abs() < 1e-12),
        other => panic!("expected a stability error, got {other:?}"),
    }
    assert!(matches!(
        solve_ibvp(&p, &Grid::for_problem(&p, 64, 16).unwrap()),
        Err(Error::Stability { .. })
    ));
    // exactly at the limit: Δt = 2Δx
    let g_edge = Grid::for_problem(&p, 65, 33).unwrap();
    assert!(solve_ibvp(&p, &g_edge).is_ok());
}

#[test]
fn singular_periodic_steady_system_is_reported() {
    let n = 8;
    let r = linalg::cyclic_thomas(&vec![1.0; n], &vec![-2.0; n], &vec![1.0; n], &vec![0.5; n]);
    assert!(matches!(r, Err(Error::Solver(_))));
}
