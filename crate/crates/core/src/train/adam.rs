use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment accumulators plus the number of steps taken.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Nothing is modified if the gradient has
/// a non-finite entry.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::Input("parameter, gradient and optimizer state sizes differ".into()));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training {
            iteration: state.step as usize,
            message: format!("non-finite gradient entry {i}"),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0, 1.0, -2.0];
        let g = [3.0, -1e-3, 250.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        for (after, (before, g)) in p.iter().zip([0.0, 1.0, -2.0].iter().zip(g)) {
            let moved = before - after;
            assert!((moved.abs() - 1e-3).abs() < 1e-8);
            assert_eq!(moved.signum(), g.signum());
        }
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.5, -0.25];
        let mut s = AdamState::new(2);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0, 0.0], &mut s, &cfg).unwrap();
        }
        assert_eq!(p, vec![0.5, -0.25]);
    }

    #[test]
    fn quadratic_matches_reference_trace() {
        // θ²/2 from θ = 1 with lr = 0.1; reference values from a separate numpy script
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let expected = [0.900000001, 0.8004122297123382, 0.701586274504415];
        let mut theta = [1.0];
        let mut s = AdamState::new(1);
        for want in expected {
            let g = [theta[0]];
            adam_step(&mut theta, &g, &mut s, &cfg).unwrap();
            assert!((theta[0] - want).abs() < 1e-12, "{} vs {want}", theta[0]);
        }
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = vec![1.0, 2.0];
        let mut s = AdamState::new(2);
        s.step = 41;
        match adam_step(&mut p, &[0.0, f64::NAN], &mut s, &AdamConfig::default()) {
            Err(Error::Training { iteration, .. }) => assert_eq!(iteration, 41),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p, vec![1.0, 2.0]);
    }
}
