use crate::error::{Error, Result};
use crate::net::{loss_gradient, Jet2, JetLoss, MlpParams, ParamGrad};
use crate::problems::{product_adjoint, Approximation, HardConstrainedNet, Point, ProblemSpec};

/// Mean squared residual of the approximation over `points`.
pub fn physics_loss(net: &dyn Approximation, points: &[Point]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Input("physics loss needs at least one point".into()));
    }
    let r = net.residuals(points)?;
    Ok(r.iter().map(|r| r * r).sum::<f64>() / r.len() as f64)
}

/// The physics loss prepared for repeated gradient evaluation on a fixed
/// point set: per-point transforms and forcing are computed once.
pub struct PhysicsLoss {
    problem: ProblemSpec,
    coeffs: Jet2,
    coords: Vec<Vec<f64>>,
    transforms: Vec<(Jet2, Jet2)>,
    forcing: Vec<f64>,
}

impl PhysicsLoss {
    pub fn new(problem: &ProblemSpec, points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Input("physics loss needs at least one point".into()));
        }
        let coords = points.iter().map(|pt| problem.coords(pt)).collect::<Result<Vec<_>>>()?;
        let forcing = points
            .iter()
            .map(|pt| if problem.is_steady() { problem.source_term(pt) } else { Ok(0.0) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            problem: problem.clone(),
            coeffs: problem.operator_coefficients(),
            transforms: coords.iter().map(|c| problem.transform_at(c)).collect(),
            coords,
            forcing,
        })
    }

    pub fn value_and_gradient(&self, params: &MlpParams) -> Result<(f64, ParamGrad)> {
        HardConstrainedNet::new(self.problem.clone(), params)?;
        loss_gradient(params, &self.problem.jet_shape(), self)
    }
}

impl JetLoss for PhysicsLoss {
    fn dim(&self) -> usize {
        self.problem.coord_dim()
    }

    fn len(&self) -> usize {
        self.coords.len()
    }

    fn seed(&self, index: usize, inputs: &mut [Jet2]) {
        inputs.clone_from_slice(&self.problem.network_inputs_at(&self.coords[index]));
    }

    fn eval(&self, index: usize, output: &Jet2, adjoint: &mut Jet2) -> f64 {
        let (base, mask) = &self.transforms[index];
        let phi = base.add(&mask.mul(output));
        let k = &self.coeffs;
        let r = k.value * phi.value
            + k.grad.iter().zip(&phi.grad).map(|(a, b)| a * b).sum::<f64>()
            + k.hess.iter().zip(&phi.hess).map(|(a, b)| a * b).sum::<f64>()
            - self.forcing[index];
        let n = self.coords.len() as f64;
        product_adjoint(mask, &k.scale(2.0 * r / n), adjoint);
        r * r / n
    }
}
