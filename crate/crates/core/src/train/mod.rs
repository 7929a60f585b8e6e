//! Physics-informed training of hard-constrained networks with Adam.

mod adam;
mod loss;

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{physics_loss, PhysicsLoss};

use crate::error::{Error, Result};
use crate::net::{init_params, MlpParams};
use crate::problems::{Point, ProblemId, ProblemSpec};

fn default_collocation() -> usize {
    10_000
}
fn default_iterations() -> usize {
    10_000
}
fn default_lr() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_divergence() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub problem: ProblemId,
    #[serde(default = "default_collocation")]
    pub n_collocation: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_eps")]
    pub adam_eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resample_each_iter: bool,
    /// Training aborts once the loss exceeds this value.
    #[serde(default = "default_divergence")]
    pub divergence_threshold: f64,
}

impl TrainConfig {
    /// 10 000 collocation points, 10 000 Adam iterations at lr 1e-3.
    pub fn well_trained(problem: ProblemId, seed: u64) -> Self {
        Self {
            problem,
            n_collocation: default_collocation(),
            iterations: default_iterations(),
            learning_rate: default_lr(),
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_eps: default_eps(),
            seed,
            resample_each_iter: false,
            divergence_threshold: default_divergence(),
        }
    }

    /// Reduced profile for quick runs: 2 000 points, 3 000 iterations.
    pub fn ci_profile(problem: ProblemId, seed: u64) -> Self {
        Self {
            n_collocation: 2_000,
            iterations: 3_000,
            ..Self::well_trained(problem, seed)
        }
    }

    /// Initialization only.
    pub fn untrained(problem: ProblemId, seed: u64) -> Self {
        Self {
            iterations: 0,
            ..Self::well_trained(problem, seed)
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations > 0 && self.n_collocation == 0 {
            return Err(Error::Config("n_collocation must be at least 1 when iterations > 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Config(format!("adam_eps must be positive, got {}", self.adam_eps)));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::Config("divergence_threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Uniform double in the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn draw_points(p: &ProblemSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let x = open_unit(rng);
            match p.id {
                ProblemId::Poisson1d => Point::line(x),
                ProblemId::Poisson2d => Point::plane(x, open_unit(rng)),
                _ => Point::space_time(x, p.t_max * open_unit(rng)),
            }
        })
        .collect()
}

fn collocation_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// `n` points drawn uniformly from the open domain.
///
/// ChaCha8 seeded with `seed_from_u64(seed)` on stream 1; coordinates are
/// drawn per point in `(x, y)` or `(x, t)` order.
pub fn sample_collocation(p: &ProblemSpec, n: usize, seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::Config("n_collocation must be at least 1".into()));
    }
    Ok(draw_points(p, n, &mut collocation_rng(seed)))
}

/// Loss before each iteration's update, plus wall time per block of
/// [`LossHistory::INTERVAL`] iterations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossHistory {
    pub losses: Vec<f64>,
    pub interval_seconds: Vec<f64>,
}

impl LossHistory {
    pub const INTERVAL: usize = 1000;

    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }

    /// `iter,loss` CSV, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{i},{l:.16e}\n"));
        }
        out
    }
}

/// Full-batch Adam on the physics loss. Returns the initial parameters
/// untouched when `iterations == 0`.
pub fn train(cfg: &TrainConfig) -> Result<(MlpParams, LossHistory)> {
    train_with(cfg, |_, _| {})
}

/// [`train`] with a callback receiving `(iteration, loss)` every
/// [`LossHistory::INTERVAL`] iterations.
pub fn train_with<F>(cfg: &TrainConfig, mut progress: F) -> Result<(MlpParams, LossHistory)>
where
    F: FnMut(usize, f64),
{
    cfg.validate()?;
    let problem = ProblemSpec::new(cfg.problem);
    let mut params = init_params(&problem.layer_sizes(), cfg.seed)?;
    let mut history = LossHistory::default();
    if cfg.iterations == 0 {
        return Ok((params, history));
    }

    let mut rng = collocation_rng(cfg.seed);
    let mut loss = PhysicsLoss::new(&problem, &draw_points(&problem, cfg.n_collocation, &mut rng))?;
    let adam = cfg.adam();
    let mut theta: Vec<f64> = params.iter().copied().collect();
    let mut state = AdamState::new(theta.len());
    let mut clock = Instant::now();

    for it in 0..cfg.iterations {
        if cfg.resample_each_iter && it > 0 {
            loss = PhysicsLoss::new(&problem, &draw_points(&problem, cfg.n_collocation, &mut rng))?;
        }
        let (value, grad) = loss.value_and_gradient(&params)?;
        if !value.is_finite() || value > cfg.divergence_threshold {
            return Err(Error::Training {
                iteration: it,
                message: format!("loss {value:e} exceeded the divergence threshold {:e}", cfg.divergence_threshold),
            });
        }
        history.losses.push(value);
        let g: Vec<f64> = grad.iter().copied().collect();
        adam_step(&mut theta, &g, &mut state, &adam).map_err(|e| match e {
            Error::Training { message, .. } => Error::Training { iteration: it, message },
            other => other,
        })?;
        for (p, t) in params.iter_mut().zip(&theta) {
            *p = *t;
        }
        if (it + 1) % LossHistory::INTERVAL == 0 || it + 1 == cfg.iterations {
            history.interval_seconds.push(clock.elapsed().as_secs_f64());
            clock = Instant::now();
            progress(it + 1, value);
        }
    }
    Ok((params, history))
}
