//! `errmap`: train hard-constrained PINNs, compute residual-based error maps,
//! sweep grid sizes and emit CSV data plus SVG plots.

pub mod commands;
pub mod config;
pub mod plots;
pub mod svg;

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use errmap_core::problems::ProblemId;
use errmap_core::Error;

pub use commands::{
    estimate, read_sweep_csv, report, sweep, sweep_csv, train, EstimateOptions, ReportSummary, SweepRow, TrainOutcome,
};
pub use config::{parse_estimators, EstimatorKind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "errmap", version, about = "Residual-based error maps for hard-constrained PINNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write `<name>.ckpt.json` plus `loss.csv`.
    Train(TrainArgs),
    /// Compute error fields, metrics and plots for a checkpoint.
    Estimate(EstimateArgs),
    /// Train one network per seed and estimate on every grid size.
    Sweep(SweepArgs),
    /// Check metrics against the emitted CSVs and redraw the plots.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem id, used when no config is given.
    #[arg(long)]
    pub problem: Option<ProblemId>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Omit wall-clock timings from written files.
    #[arg(long, default_value_t = true, action = ArgAction::Set, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: bool,
}

impl Common {
    pub fn run_config(&self) -> errmap_core::Result<RunConfig> {
        match (&self.config, self.problem) {
            (Some(path), None) => RunConfig::load(path),
            (Some(path), Some(p)) => {
                let cfg = RunConfig::load(path)?;
                if cfg.problem != p {
                    return Err(Error::Config(format!("problem: --problem {p} contradicts the config's {}", cfg.problem)));
                }
                Ok(cfg)
            }
            (None, Some(p)) => Ok(RunConfig::for_problem(p)),
            (None, None) => Err(Error::Config("problem: pass --config or --problem".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub common: Common,
    /// Spatial nodes per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Comma-separated subset of res,fdm,bound.
    #[arg(long)]
    pub estimators: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated seeds, replacing the config's list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Run a single seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated grid sizes, replacing the config's list.
    #[arg(long, value_delimiter = ',')]
    pub grid_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub estimators: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `estimate` or `sweep`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Process exit status for an error: 2 configuration, 3 numerical, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Input(_) | Error::Unsupported(_) | Error::Grid(_) | Error::Json(_) => 2,
        Error::Solver(_) | Error::Stability { .. } | Error::Training { .. } => 3,
        Error::Io(_) | Error::Checkpoint(_) => 4,
    }
}

pub fn run(cli: Cli) -> errmap_core::Result<()> {
    match cli.command {
        Command::Train(a) => {
            let mut cfg = a.common.run_config()?;
            if let Some(s) = a.seed {
                cfg.train.seed = s;
            }
            let stem = match (&a.common.config, &cfg.name) {
                (_, Some(name)) => name.clone(),
                (Some(path), None) => path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string(),
                (None, None) => cfg.problem.to_string(),
            };
            let out = train(&cfg, &stem, &a.common.out)?;
            match out.final_loss {
                Some(l) => println!("final loss {l:.6e}"),
                None => println!("no training iterations"),
            }
            println!("wall time {:.2} s", out.seconds);
            println!("checkpoint {}", out.checkpoint.display());
            Ok(())
        }
        Command::Estimate(a) => {
            let cfg = match (&a.common.config, a.common.problem) {
                (None, None) => None,
                _ => Some(a.common.run_config()?),
            };
            let mut opts = EstimateOptions::from_config(cfg.as_ref());
            if let Some(k) = a.grid {
                opts.grid = k;
            }
            if let Some(list) = &a.estimators {
                opts.estimators = Some(parse_estimators(list)?);
            }
            opts.timings = !a.common.deterministic;
            let m = estimate(&a.checkpoint, &opts, &a.common.out)?;
            if let Some(v) = m.l2_true_res {
                println!("l2_true_res {v:.6e}");
            }
            if let Some(v) = m.l2_true_fdm {
                println!("l2_true_fdm {v:.6e}");
            }
            if let Some((t, b)) = m.bound_curve.as_ref().and_then(|c| c.last()) {
                println!("bound at t={t} {b:.6e}");
            }
            Ok(())
        }
        Command::Sweep(a) => {
            let mut cfg = a.common.run_config()?;
            if let Some(seeds) = a.seeds {
                cfg.seeds = seeds;
            }
            if let Some(s) = a.seed {
                cfg.seeds = vec![s];
            }
            if let Some(ks) = a.grid_sizes {
                cfg.grid_sizes = ks;
            }
            if let Some(list) = &a.estimators {
                cfg.estimators = parse_estimators(list)?;
            }
            cfg.validate()?;
            let rows = sweep(&cfg, &a.common.out)?;
            println!("{} rows written to {}", rows.len(), a.common.out.join("sweep.csv").display());
            Ok(())
        }
        Command::Report(a) => {
            let s = report(&a.out)?;
            if let Some(d) = s.max_metric_deviation {
                println!("metrics.json matches the field CSVs (max deviation {d:.3e})");
            }
            if let Some(n) = s.sweep_rows {
                println!("sweep.csv: {n} rows");
            }
            println!("{} plots written", s.plots.len());
            Ok(())
        }
    }
}
