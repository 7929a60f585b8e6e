//! The five benchmark IBVPs: analytic solutions, output transforms that
//! enforce the initial and boundary conditions exactly, and the residual
//! operator applied to jets.
//!
//! Every problem lives on `(0, 1)` in each spatial dimension and, if
//! time-dependent, on `t ∈ [0, 1]`. Jets are taken with respect to the
//! problem's coordinates: `(x)`, `(x, y)` or `(x, t)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Jet2, JetShape, MlpParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemId {
    Poisson1d,
    Poisson2d,
    Heat,
    DriftDiffusion,
    Wave,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::Poisson1d,
        ProblemId::Poisson2d,
        ProblemId::Heat,
        ProblemId::DriftDiffusion,
        ProblemId::Wave,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Poisson1d => "poisson1d",
            ProblemId::Poisson2d => "poisson2d",
            ProblemId::Heat => "heat",
            ProblemId::DriftDiffusion => "drift_diffusion",
            ProblemId::Wave => "wave",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("problem: unknown id {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    DirichletZero,
    Periodic,
}

/// A point of the space(-time) domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: Option<f64>,
    pub t: Option<f64>,
}

impl Point {
    pub fn line(x: f64) -> Self {
        Self { x, y: None, t: None }
    }

    pub fn plane(x: f64, y: f64) -> Self {
        Self { x, y: Some(y), t: None }
    }

    pub fn space_time(x: f64, t: f64) -> Self {
        Self { x, y: None, t: Some(t) }
    }
}

/// One benchmark problem with its coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: ProblemId,
    /// Diffusivity (heat, drift-diffusion).
    pub alpha: f64,
    /// Drift velocity (drift-diffusion).
    pub beta: f64,
    /// Wave speed.
    pub c: f64,
    pub t_max: f64,
}

impl ProblemSpec {
    pub fn new(id: ProblemId) -> Self {
        let t_max = if matches!(id, ProblemId::Poisson1d | ProblemId::Poisson2d) { 0.0 } else { 1.0 };
        Self {
            id,
            alpha: 1.0 / 20.0,
            beta: 2.0,
            c: 0.5,
            t_max,
        }
    }

    pub fn time_order(&self) -> usize {
        match self.id {
            ProblemId::Poisson1d | ProblemId::Poisson2d => 0,
            ProblemId::Heat | ProblemId::DriftDiffusion => 1,
            ProblemId::Wave => 2,
        }
    }

    pub fn bc_kind(&self) -> BcKind {
        match self.id {
            ProblemId::DriftDiffusion => BcKind::Periodic,
            _ => BcKind::DirichletZero,
        }
    }

    pub fn spatial_dims(&self) -> usize {
        if self.id == ProblemId::Poisson2d {
            2
        } else {
            1
        }
    }

    pub fn is_steady(&self) -> bool {
        self.time_order() == 0
    }

    /// Number of coordinates the jets are taken in.
    pub fn coord_dim(&self) -> usize {
        if self.id == ProblemId::Poisson1d {
            1
        } else {
            2
        }
    }

    /// Raw network input width: periodic problems feed `(sin 2πx, cos 2πx, t)`.
    pub fn network_input_dim(&self) -> usize {
        match self.id {
            ProblemId::DriftDiffusion => 3,
            _ => self.coord_dim(),
        }
    }

    /// `[d_in, 20, 20, 20, 1]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        vec![self.network_input_dim(), 20, 20, 20, 1]
    }

    /// Hessian entries the operator and the transform need.
    pub fn jet_shape(&self) -> JetShape {
        let d = self.coord_dim();
        match self.id {
            ProblemId::Poisson2d | ProblemId::Wave => JetShape::with_pairs(d, &[(0, 0), (1, 1)]),
            _ => JetShape::with_pairs(d, &[(0, 0)]),
        }
    }

    /// Coordinates of `pt` in jet order, checked against the domain.
    pub fn coords(&self, pt: &Point) -> Result<Vec<f64>> {
        let inside = |v: f64, hi: f64| (0.0..=hi).contains(&v);
        let bad = || Error::Input(format!("{pt:?} is not a point of the {} domain", self.id));
        if !inside(pt.x, 1.0) {
            return Err(bad());
        }
        match (self.id, pt.y, pt.t) {
            (ProblemId::Poisson1d, None, None) => Ok(vec![pt.x]),
            (ProblemId::Poisson2d, Some(y), None) if inside(y, 1.0) => Ok(vec![pt.x, y]),
            (ProblemId::Heat | ProblemId::DriftDiffusion | ProblemId::Wave, None, Some(t)) if inside(t, self.t_max) => {
                Ok(vec![pt.x, t])
            }
            _ => Err(bad()),
        }
    }

    /// Initial condition `u₀(x) = sin(2πx)`.
    pub fn u0(&self, x: f64) -> f64 {
        (TAU * x).sin()
    }

    fn u0_jet(&self, x: &Jet2) -> Jet2 {
        x.scale(TAU).sin()
    }

    pub fn source_term(&self, pt: &Point) -> Result<f64> {
        let c = self.coords(pt)?;
        match self.id {
            ProblemId::Poisson1d => Ok(-4.0 * PI * PI * (TAU * c[0]).sin()),
            ProblemId::Poisson2d => Ok(-5.0 * PI * PI * (TAU * c[0]).sin() * (PI * c[1]).sin()),
            other => Err(Error::Config(format!("source_term is defined for poisson problems only, not {other}"))),
        }
    }

    pub fn analytic_solution(&self, pt: &Point) -> Result<f64> {
        let c = self.coords(pt)?;
        Ok(match self.id {
            ProblemId::Poisson1d => (TAU * c[0]).sin(),
            ProblemId::Poisson2d => (TAU * c[0]).sin() * (PI * c[1]).sin(),
            ProblemId::Heat => self.decay(c[1]) * (TAU * c[0]).sin(),
            ProblemId::DriftDiffusion => self.decay(c[1]) * (TAU * (c[0] + self.beta * c[1])).sin(),
            ProblemId::Wave => (TAU * c[0]).sin() * (TAU * self.c * c[1]).cos(),
        })
    }

    fn decay(&self, t: f64) -> f64 {
        (-4.0 * PI * PI * self.alpha * t).exp()
    }

    /// Exact jet of the analytic solution.
    pub fn analytic_jet(&self, pt: &Point) -> Result<Jet2> {
        let c = self.coords(pt)?;
        let d = c.len();
        let x = Jet2::variable(d, 0, c[0]);
        Ok(match self.id {
            ProblemId::Poisson1d => x.scale(TAU).sin(),
            ProblemId::Poisson2d => x.scale(TAU).sin().mul(&Jet2::variable(d, 1, c[1]).scale(PI).sin()),
            ProblemId::Heat => {
                let t = Jet2::variable(d, 1, c[1]);
                t.scale(-4.0 * PI * PI * self.alpha).exp().mul(&x.scale(TAU).sin())
            }
            ProblemId::DriftDiffusion => {
                let t = Jet2::variable(d, 1, c[1]);
                let phase = x.add(&t.scale(self.beta)).scale(TAU);
                t.scale(-4.0 * PI * PI * self.alpha).exp().mul(&phase.sin())
            }
            ProblemId::Wave => {
                let t = Jet2::variable(d, 1, c[1]);
                x.scale(TAU).sin().mul(&t.scale(TAU * self.c).cos())
            }
        })
    }

    /// Coefficients of the linear part of the operator, as a jet-shaped
    /// covector: `D_lin[u] = Σ coeff ⊙ jet(u)`. Hessian entries are read
    /// one-sided (entry `(i, j)` only, never mirrored).
    pub fn operator_coefficients(&self) -> Jet2 {
        let d = self.coord_dim();
        let mut k = Jet2::zero(d);
        let diag = |i: usize| i * d + i;
        match self.id {
            ProblemId::Poisson1d => k.hess[diag(0)] = 1.0,
            ProblemId::Poisson2d => {
                k.hess[diag(0)] = 1.0;
                k.hess[diag(1)] = 1.0;
            }
            ProblemId::Heat => {
                k.grad[1] = 1.0;
                k.hess[diag(0)] = -self.alpha;
            }
            ProblemId::DriftDiffusion => {
                k.grad[1] = 1.0;
                k.hess[diag(0)] = -self.alpha;
                k.grad[0] = -self.beta;
            }
            ProblemId::Wave => {
                k.hess[diag(1)] = 1.0;
                k.hess[diag(0)] = -self.c * self.c;
            }
        }
        k
    }

    /// Residual `D[trial](pt)` from the trial function's jet at `pt`.
    pub fn apply_operator(&self, jet: &Jet2, pt: &Point) -> Result<f64> {
        if jet.dim() != self.coord_dim() {
            return Err(Error::Input(format!(
                "{} needs jets in {} coordinates, got {}",
                self.id,
                self.coord_dim(),
                jet.dim()
            )));
        }
        let k = self.operator_coefficients();
        let linear = k.value * jet.value
            + k.grad.iter().zip(&jet.grad).map(|(a, b)| a * b).sum::<f64>()
            + k.hess.iter().zip(&jet.hess).map(|(a, b)| a * b).sum::<f64>();
        let forcing = if self.is_steady() { self.source_term(pt)? } else { 0.0 };
        Ok(linear - forcing)
    }

    /// Input jets fed to the raw network at `pt`.
    pub fn network_inputs(&self, pt: &Point) -> Result<Vec<Jet2>> {
        let c = self.coords(pt)?;
        Ok(self.network_inputs_at(&c))
    }

    pub(crate) fn network_inputs_at(&self, c: &[f64]) -> Vec<Jet2> {
        let d = c.len();
        match self.id {
            ProblemId::DriftDiffusion => {
                let phase = Jet2::variable(d, 0, c[0]).scale(TAU);
                vec![phase.sin(), phase.cos(), Jet2::variable(d, 1, c[1])]
            }
            _ => (0..d).map(|i| Jet2::variable(d, i, c[i])).collect(),
        }
    }

    /// `(base, mask)` with `φ̂ = base + mask · φ_raw`.
    pub(crate) fn transform_at(&self, c: &[f64]) -> (Jet2, Jet2) {
        let d = c.len();
        let x = Jet2::variable(d, 0, c[0]);
        let bubble = x.mul(&x.add(&Jet2::constant(d, -1.0)));
        match self.id {
            ProblemId::Poisson1d => (Jet2::zero(d), bubble),
            ProblemId::Poisson2d => {
                let y = Jet2::variable(d, 1, c[1]);
                (Jet2::zero(d), bubble.mul(&y.mul(&y.add(&Jet2::constant(d, -1.0)))))
            }
            ProblemId::Heat => (self.u0_jet(&x), Jet2::variable(d, 1, c[1]).mul(&bubble)),
            ProblemId::Wave => {
                let t = Jet2::variable(d, 1, c[1]);
                (self.u0_jet(&x), t.mul(&t).mul(&bubble))
            }
            ProblemId::DriftDiffusion => (self.u0_jet(&x), Jet2::variable(d, 1, c[1])),
        }
    }

    /// Jet of the constrained output from the raw network jet at `pt`.
    pub fn hard_constrain(&self, raw: &Jet2, pt: &Point) -> Result<Jet2> {
        let c = self.coords(pt)?;
        if raw.dim() != c.len() {
            return Err(Error::Input(format!("raw jet has dimension {}, expected {}", raw.dim(), c.len())));
        }
        let (base, mask) = self.transform_at(&c);
        Ok(base.add(&mask.mul(raw)))
    }
}

/// Transpose of `raw ↦ mask · raw` on jets: maps a cotangent of the product
/// to a cotangent of `raw`. Entries are independent on both sides.
pub(crate) fn product_adjoint(mask: &Jet2, cot: &Jet2, out: &mut Jet2) {
    let d = mask.dim();
    let m0 = mask.value;
    let mut v = cot.value * m0;
    for i in 0..d {
        v += cot.grad[i] * mask.grad[i];
        out.grad[i] = cot.grad[i] * m0;
    }
    for i in 0..d {
        for j in 0..d {
            let c = cot.hess[i * d + j];
            if c == 0.0 {
                out.hess[i * d + j] = 0.0;
                continue;
            }
            v += c * mask.hess[i * d + j];
            out.grad[j] += c * mask.grad[i];
            out.grad[i] += c * mask.grad[j];
            out.hess[i * d + j] = c * m0;
        }
    }
    out.value = v;
}

/// A candidate solution `φ̂` that can be evaluated with jets on batches.
pub trait Approximation: Sync {
    fn problem(&self) -> &ProblemSpec;

    /// Jets of `φ̂` carrying at least the entries of `problem().jet_shape()`.
    fn jets(&self, pts: &[Point]) -> Result<Vec<Jet2>>;

    fn values(&self, pts: &[Point]) -> Result<Vec<f64>> {
        Ok(self.jets(pts)?.into_iter().map(|j| j.value).collect())
    }

    fn residuals(&self, pts: &[Point]) -> Result<Vec<f64>> {
        let p = self.problem();
        self.jets(pts)?
            .iter()
            .zip(pts)
            .map(|(j, pt)| p.apply_operator(j, pt))
            .collect()
    }
}

/// The analytic solution posing as an approximation.
pub struct ExactSolution {
    pub problem: ProblemSpec,
}

impl Approximation for ExactSolution {
    fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    fn jets(&self, pts: &[Point]) -> Result<Vec<Jet2>> {
        pts.iter().map(|pt| self.problem.analytic_jet(pt)).collect()
    }

    fn values(&self, pts: &[Point]) -> Result<Vec<f64>> {
        pts.iter().map(|pt| self.problem.analytic_solution(pt)).collect()
    }
}

/// Raw MLP composed with the problem's hard-constraining transform.
pub struct HardConstrainedNet<'a> {
    pub problem: ProblemSpec,
    pub params: &'a MlpParams,
}

impl<'a> HardConstrainedNet<'a> {
    pub fn new(problem: ProblemSpec, params: &'a MlpParams) -> Result<Self> {
        params.validate()?;
        if params.input_dim() != problem.network_input_dim() {
            return Err(Error::Input(format!(
                "{} needs a network with {} inputs, checkpoint has {}",
                problem.id,
                problem.network_input_dim(),
                params.input_dim()
            )));
        }
        Ok(Self { problem, params })
    }

    /// Jets of the raw network at each point, in problem coordinates.
    pub fn raw_jets(&self, coords: &[Vec<f64>], shape: &JetShape) -> Result<Vec<Jet2>> {
        let p = &self.problem;
        self.params.forward_jets(shape, coords.len(), |i, slot| {
            slot.clone_from_slice(&p.network_inputs_at(&coords[i]));
        })
    }
}

impl Approximation for HardConstrainedNet<'_> {
    fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    fn jets(&self, pts: &[Point]) -> Result<Vec<Jet2>> {
        let coords = pts.iter().map(|pt| self.problem.coords(pt)).collect::<Result<Vec<_>>>()?;
        let raw = self.raw_jets(&coords, &self.problem.jet_shape())?;
        Ok(raw
            .iter()
            .zip(&coords)
            .map(|(r, c)| {
                let (base, mask) = self.problem.transform_at(c);
                base.add(&mask.mul(r))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::init_params;

    fn heat() -> ProblemSpec {
        ProblemSpec::new(ProblemId::Heat)
    }

    #[test]
    fn table_parameters() {
        let p = heat();
        assert_eq!((p.alpha, p.beta, p.c), (0.05, 2.0, 0.5));
        assert_eq!(ProblemSpec::new(ProblemId::Wave).time_order(), 2);
        assert_eq!(ProblemSpec::new(ProblemId::Poisson2d).time_order(), 0);
        assert_eq!(ProblemSpec::new(ProblemId::DriftDiffusion).bc_kind(), BcKind::Periodic);
        for id in ProblemId::ALL {
            assert_eq!(id.as_str().parse::<ProblemId>().unwrap(), id);
        }
        assert!(matches!("burgers".parse::<ProblemId>(), Err(Error::Config(_))));
    }

    #[test]
    fn analytic_values() {
        let p = heat();
        assert_eq!(p.analytic_solution(&Point::space_time(0.25, 0.0)).unwrap(), 1.0);
        let v = p.analytic_solution(&Point::space_time(0.25, 1.0)).unwrap();
        assert!((v - (-PI * PI / 5.0).exp()).abs() < 1e-15);
        assert!((v - 0.138_911_133_142_800_26).abs() < 1e-15);
        let w = ProblemSpec::new(ProblemId::Wave);
        // 2πct = π/2 at t = 1/(4c) = 0.5
        for x in [0.1, 0.3, 0.77] {
            assert!(w.analytic_solution(&Point::space_time(x, 0.5)).unwrap().abs() < 1e-15);
        }
        assert!(matches!(p.analytic_solution(&Point::space_time(1.5, 0.0)), Err(Error::Input(_))));
        assert!(matches!(p.analytic_solution(&Point::line(0.5)), Err(Error::Input(_))));
    }

    #[test]
    fn source_terms() {
        let p1 = ProblemSpec::new(ProblemId::Poisson1d);
        assert!((p1.source_term(&Point::line(0.25)).unwrap() + 4.0 * PI * PI).abs() < 1e-12);
        assert_eq!(p1.source_term(&Point::line(0.0)).unwrap(), 0.0);
        let p2 = ProblemSpec::new(ProblemId::Poisson2d);
        assert!((p2.source_term(&Point::plane(0.25, 0.5)).unwrap() + 5.0 * PI * PI).abs() < 1e-12);
        assert!(matches!(heat().source_term(&Point::space_time(0.2, 0.1)), Err(Error::Config(_))));
    }

    #[test]
    fn operator_on_simple_trials() {
        let p1 = ProblemSpec::new(ProblemId::Poisson1d);
        let r = p1.apply_operator(&Jet2::zero(1), &Point::line(0.25)).unwrap();
        assert!((r - 4.0 * PI * PI).abs() < 1e-12);

        // u = t² x: u_tt = 2x, u_xx = 0
        let w = ProblemSpec::new(ProblemId::Wave);
        let (x, t) = (0.3, 0.6);
        let xj = Jet2::variable(2, 0, x);
        let tj = Jet2::variable(2, 1, t);
        let u = tj.mul(&tj).mul(&xj);
        assert!((w.apply_operator(&u, &Point::space_time(x, t)).unwrap() - 2.0 * x).abs() < 1e-15);

        assert!(matches!(w.apply_operator(&Jet2::zero(1), &Point::space_time(x, t)), Err(Error::Input(_))));
    }

    #[test]
    fn analytic_solution_has_zero_residual() {
        for id in ProblemId::ALL {
            let p = ProblemSpec::new(id);
            let mut worst = 0.0f64;
            for i in 0..1000 {
                // additive recurrence: quasi-random interior points
                let a = (0.5 + i as f64 * 0.618_033_988_749_895) % 1.0;
                let b = (0.5 + i as f64 * 0.754_877_666_246_693) % 1.0;
                let pt = match id {
                    ProblemId::Poisson1d => Point::line(a),
                    ProblemId::Poisson2d => Point::plane(a, b),
                    _ => Point::space_time(a, b),
                };
                let jet = p.analytic_jet(&pt).unwrap();
                assert!((jet.value - p.analytic_solution(&pt).unwrap()).abs() < 1e-15);
                worst = worst.max(p.apply_operator(&jet, &pt).unwrap().abs());
            }
            assert!(worst <= 1e-12, "{id}: {worst}");
        }
    }

    #[test]
    fn constraint_adjoint_is_transpose() {
        // <cot, mask*raw> == <adjoint(cot), raw> for random jets
        let c = [0.3, 0.7];
        let p = ProblemSpec::new(ProblemId::Wave);
        let (_, mask) = p.transform_at(&c);
        let mut raw = Jet2::zero(2);
        let mut cot = Jet2::zero(2);
        let vals = [0.3, -1.2, 0.8, 2.0, -0.4, 1.1, 0.9, 0.2, -0.7, 1.5, 0.25, -2.2, 0.6, 1.8];
        raw.value = vals[0];
        raw.grad.copy_from_slice(&vals[1..3]);
        raw.set_hess(0, 0, vals[3]);
        raw.set_hess(0, 1, vals[4]);
        raw.set_hess(1, 1, vals[5]);
        cot.value = vals[6];
        cot.grad.copy_from_slice(&vals[7..9]);
        cot.hess.copy_from_slice(&vals[9..13]);
        let dot = |a: &Jet2, b: &Jet2| {
            a.value * b.value
                + a.grad.iter().zip(&b.grad).map(|(x, y)| x * y).sum::<f64>()
                + a.hess.iter().zip(&b.hess).map(|(x, y)| x * y).sum::<f64>()
        };
        let mut adj = Jet2::zero(2);
        product_adjoint(&mask, &cot, &mut adj);
        assert!((dot(&cot, &mask.mul(&raw)) - dot(&adj, &raw)).abs() < 1e-13);
    }

    #[test]
    fn heat_transform_at_initial_time() {
        let p = heat();
        let params = init_params(&p.layer_sizes(), 5).unwrap();
        let net = HardConstrainedNet::new(p.clone(), &params).unwrap();
        let pts: Vec<_> = (0..11).map(|i| Point::space_time(i as f64 / 10.0, 0.0)).collect();
        for (v, pt) in net.values(&pts).unwrap().iter().zip(&pts) {
            assert_eq!(*v, p.u0(pt.x));
        }
    }

    #[test]
    fn wrong_network_width_is_rejected() {
        let params = init_params(&[2, 4, 1], 1).unwrap();
        let p = ProblemSpec::new(ProblemId::DriftDiffusion);
        assert!(matches!(HardConstrainedNet::new(p, &params), Err(Error::Input(_))));
    }
}
