//! Run configuration shared by every subcommand.

use std::path::Path;
use std::str::FromStr;

use errmap_core::errormap::{BoundConfig, Estimators};
use errmap_core::problems::ProblemId;
use errmap_core::train::TrainConfig;
use errmap_core::{Error, Result};
use serde::Deserialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EstimatorKind {
    Res,
    Fdm,
    Bound,
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "res" => Ok(Self::Res),
            "fdm" => Ok(Self::Fdm),
            "bound" => Ok(Self::Bound),
            other => Err(Error::Config(format!("estimators: unknown estimator {other:?} (expected res, fdm, bound)"))),
        }
    }
}

pub fn parse_estimators(list: &str) -> Result<Vec<EstimatorKind>> {
    let mut out = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Config("estimators: list is empty".into()));
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    train: Option<Value>,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    time_nodes: Option<usize>,
    #[serde(default)]
    grid_sizes: Option<Vec<usize>>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    estimators: Option<Vec<String>>,
    #[serde(default)]
    bound: Option<BoundConfig>,
    #[serde(default = "yes")]
    plots: bool,
}

fn yes() -> bool {
    true
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub name: Option<String>,
    pub train: TrainConfig,
    pub grid: usize,
    /// Temporal nodes; the spatial node count when absent.
    pub time_nodes: Option<usize>,
    pub grid_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub estimators: Vec<EstimatorKind>,
    pub bound: BoundConfig,
    pub plots: bool,
}

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_SWEEP: [usize; 5] = [9, 17, 33, 65, 129];

impl RunConfig {
    /// Defaults for `problem`: well-trained training, 64-node grid, every
    /// estimator the problem supports.
    pub fn for_problem(problem: ProblemId) -> Self {
        let mut estimators = vec![EstimatorKind::Res, EstimatorKind::Fdm];
        if problem == ProblemId::Heat {
            estimators.push(EstimatorKind::Bound);
        }
        Self {
            problem,
            name: None,
            train: TrainConfig::well_trained(problem, 0),
            grid: DEFAULT_GRID,
            time_nodes: None,
            grid_sizes: DEFAULT_SWEEP.to_vec(),
            seeds: vec![0],
            estimators,
            bound: BoundConfig::default(),
            plots: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        let problem = ProblemId::from_str(&raw.problem)?;
        let mut cfg = Self::for_problem(problem);
        cfg.name = raw.name;
        if let Some(train) = raw.train {
            let mut obj = match train {
                Value::Object(map) => map,
                _ => return Err(Error::Config("train: expected an object".into())),
            };
            if obj.contains_key("problem") {
                return Err(Error::Config("train.problem: set the problem at the top level".into()));
            }
            obj.insert("problem".into(), Value::String(problem.as_str().into()));
            cfg.train = serde_json::from_value(Value::Object(obj)).map_err(|e| Error::Config(format!("train: {e}")))?;
        }
        if let Some(k) = raw.grid {
            cfg.grid = k;
        }
        cfg.time_nodes = raw.time_nodes;
        if let Some(ks) = raw.grid_sizes {
            cfg.grid_sizes = ks;
        }
        if let Some(seeds) = raw.seeds {
            cfg.seeds = seeds;
        } else {
            cfg.seeds = vec![cfg.train.seed];
        }
        if let Some(list) = raw.estimators {
            cfg.estimators = parse_estimators(&list.join(","))?;
        }
        if let Some(b) = raw.bound {
            cfg.bound = b;
        }
        cfg.plots = raw.plots;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.train.problem != self.problem {
            return Err(Error::Config("train.problem differs from problem".into()));
        }
        if self.grid < 3 {
            return Err(Error::Config(format!("grid: need at least 3 nodes, got {}", self.grid)));
        }
        if let Some(k) = self.grid_sizes.iter().find(|k| **k < 3) {
            return Err(Error::Config(format!("grid_sizes: need at least 3 nodes, got {k}")));
        }
        if self.time_nodes.is_some_and(|n| n < 2) {
            return Err(Error::Config("time_nodes: need at least 2".into()));
        }
        if self.estimators.contains(&EstimatorKind::Bound) && self.problem != ProblemId::Heat {
            return Err(Error::Config(format!(
                "estimators: the bound is only available for heat, not {}",
                self.problem
            )));
        }
        Ok(())
    }

    pub fn estimator_set(&self) -> Estimators {
        Estimators {
            res: self.estimators.contains(&EstimatorKind::Res),
            fdm: self.estimators.contains(&EstimatorKind::Fdm),
            bound: self.estimators.contains(&EstimatorKind::Bound).then(|| self.bound.clone()),
        }
    }

    pub fn time_nodes_for(&self, k: usize) -> usize {
        self.time_nodes.unwrap_or(k)
    }
}
