use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use errmap_core::errormap::{estimate as run_estimators, BoundConfig, ErrorReport, MetricsFile};
use errmap_core::errormap::{euclidean_distance, slice_l2_curve};
use errmap_core::fdm::{Grid, SpaceTimeField};
use errmap_core::net::{load_checkpoint, save_checkpoint, Meta, MlpParams};
use errmap_core::problems::{HardConstrainedNet, ProblemId, ProblemSpec};
use errmap_core::train::{train_with, LossHistory, TrainConfig};
use errmap_core::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{EstimatorKind, RunConfig, DEFAULT_GRID};
use crate::plots::{l2_over_time_figure, slices_figure, sweep_figure, ErrorFields};

const META_PROBLEM: &str = "problem";
const META_TRAIN: &str = "train_config";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn checkpoint_meta(cfg: &TrainConfig) -> Result<Meta> {
    let mut meta = Meta::new();
    meta.insert(META_PROBLEM.into(), cfg.problem.to_string());
    meta.insert(META_TRAIN.into(), serde_json::to_string(cfg)?);
    Ok(meta)
}

/// Problem and training configuration recorded in a checkpoint.
pub fn checkpoint_problem(meta: &Meta) -> Result<(ProblemId, Option<TrainConfig>)> {
    let id = meta
        .get(META_PROBLEM)
        .ok_or_else(|| Error::Checkpoint("meta.problem is missing".into()))?;
    let id = ProblemId::from_str(id).map_err(|e| Error::Checkpoint(format!("meta.problem: {e}")))?;
    let train = meta
        .get(META_TRAIN)
        .map(|s| serde_json::from_str(s).map_err(|e| Error::Checkpoint(format!("meta.train_config: {e}"))))
        .transpose()?;
    Ok((id, train))
}

pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub params: MlpParams,
    pub history: LossHistory,
    pub final_loss: Option<f64>,
    pub seconds: f64,
}

/// Trains `cfg.train` and writes `<out>/<stem>.ckpt.json` and `<out>/loss.csv`.
pub fn train(cfg: &RunConfig, stem: &str, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    create_dir(out)?;
    let start = Instant::now();
    let (params, history) = train_with(&cfg.train, |it, loss| eprintln!("iter {it:>6}  loss {loss:.6e}"))?;
    let seconds = start.elapsed().as_secs_f64();
    let checkpoint = out.join(format!("{stem}.ckpt.json"));
    save_checkpoint(&params, &checkpoint_meta(&cfg.train)?, &checkpoint)?;
    write(&out.join("loss.csv"), &history.to_csv())?;
    Ok(TrainOutcome {
        checkpoint,
        final_loss: history.final_loss(),
        params,
        history,
        seconds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    /// Expected problem; a checkpoint for another problem is rejected.
    pub problem: Option<ProblemId>,
    pub grid: usize,
    pub time_nodes: Option<usize>,
    /// `None` selects every estimator the checkpoint's problem supports.
    pub estimators: Option<Vec<EstimatorKind>>,
    pub bound: BoundConfig,
    pub plots: bool,
    /// Record wall times in metrics.json.
    pub timings: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self::from_config(None)
    }
}

impl EstimateOptions {
    pub fn from_config(cfg: Option<&RunConfig>) -> Self {
        match cfg {
            Some(c) => Self {
                problem: Some(c.problem),
                grid: c.grid,
                time_nodes: c.time_nodes,
                estimators: Some(c.estimators.clone()),
                bound: c.bound.clone(),
                plots: c.plots,
                timings: false,
            },
            None => Self {
                problem: None,
                grid: DEFAULT_GRID,
                time_nodes: None,
                estimators: None,
                bound: BoundConfig::default(),
                plots: true,
                timings: false,
            },
        }
    }

    fn resolve(&self, problem: ProblemId) -> Result<Vec<EstimatorKind>> {
        let list = match &self.estimators {
            Some(l) => l.clone(),
            None => RunConfig::for_problem(problem).estimators,
        };
        if list.contains(&EstimatorKind::Bound) && problem != ProblemId::Heat {
            return Err(Error::Config(format!(
                "estimators: the bound is only available for heat, not {problem}"
            )));
        }
        Ok(list)
    }
}

fn metrics_of(report: &ErrorReport, seed: u64, config: Value, timings: bool) -> Result<MetricsFile> {
    Ok(MetricsFile {
        problem: report.problem,
        grid: report.grid.clone(),
        seed,
        config,
        l2_true_res: report.l2_true_res()?,
        l2_true_fdm: report.l2_true_fdm()?,
        bound_curve: report.bound.as_ref().map(|b| b.points.clone()),
        bound_steps: report.bound.as_ref().map(|b| b.steps),
        l2_curves: report.curves(),
        runtime_seconds: timings.then(|| report.runtime_seconds.clone()),
    })
}

fn write_plots(dir: &Path, m: &MetricsFile, fields: &ErrorFields) -> Result<Vec<PathBuf>> {
    let mut written = vec![dir.join("slices.svg")];
    write(&written[0], &slices_figure(m.problem, fields))?;
    if let Some(svg) = l2_over_time_figure(m) {
        let path = dir.join("l2_over_time.svg");
        write(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

/// Loads a checkpoint, runs the selected estimators and writes field CSVs,
/// `metrics.json` and the plots into `out`.
pub fn estimate(checkpoint: &Path, opts: &EstimateOptions, out: &Path) -> Result<MetricsFile> {
    let (params, meta) = load_checkpoint(checkpoint)?;
    let (id, train_cfg) = checkpoint_problem(&meta)?;
    if opts.problem.is_some_and(|p| p != id) {
        return Err(Error::Config(format!(
            "problem: the configuration names {} but the checkpoint holds {id}",
            opts.problem.unwrap()
        )));
    }
    let which = opts.resolve(id)?;
    let p = ProblemSpec::new(id);
    let grid = Grid::for_problem(&p, opts.grid, opts.time_nodes.unwrap_or(opts.grid))?;
    let net = HardConstrainedNet::new(p, &params)?;
    let estimators = errmap_core::errormap::Estimators {
        res: which.contains(&EstimatorKind::Res),
        fdm: which.contains(&EstimatorKind::Fdm),
        bound: which.contains(&EstimatorKind::Bound).then(|| opts.bound.clone()),
    };
    let report = run_estimators(&net, &grid, &estimators)?;

    let names: Vec<&str> = which
        .iter()
        .map(|e| match e {
            EstimatorKind::Res => "res",
            EstimatorKind::Fdm => "fdm",
            EstimatorKind::Bound => "bound",
        })
        .collect();
    let config = json!({
        "checkpoint": checkpoint.file_name().and_then(|s| s.to_str()),
        "train": train_cfg,
        "grid": opts.grid,
        "time_nodes": grid.time_nodes,
        "estimators": names,
        "bound": estimators.bound,
    });
    let metrics = metrics_of(&report, params.seed, config, opts.timings)?;

    create_dir(out)?;
    write(&out.join("e_true.csv"), &report.e_true.to_csv())?;
    for (name, field) in [("residual", &report.residual), ("e_res", &report.e_res), ("e_fdm", &report.e_fdm)] {
        if let Some(f) = field {
            write(&out.join(format!("{name}.csv")), &f.to_csv())?;
        }
    }
    write(&out.join("metrics.json"), &(serde_json::to_string_pretty(&metrics)? + "\n"))?;
    if opts.plots {
        let fields = ErrorFields {
            e_true: report.e_true,
            e_res: report.e_res,
            e_fdm: report.e_fdm,
        };
        write_plots(out, &metrics, &fields)?;
    }
    Ok(metrics)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub problem: ProblemId,
    pub seed: u64,
    pub k: usize,
    pub method: String,
    pub l2_accuracy: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("problem,seed,k,method,l2_accuracy\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{:.16e}\n", r.problem, r.seed, r.k, r.method, r.l2_accuracy));
    }
    out
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some("problem,seed,k,method,l2_accuracy") {
        return Err(Error::Input("sweep.csv: unexpected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = || Error::Input(format!("sweep.csv line {}: cannot parse {line:?}", i + 2));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad());
            }
            Ok(SweepRow {
                problem: cols[0].parse().map_err(|_| bad())?,
                seed: cols[1].parse().map_err(|_| bad())?,
                k: cols[2].parse().map_err(|_| bad())?,
                method: cols[3].to_string(),
                l2_accuracy: cols[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Trains or reloads the checkpoint for one seed. A cached file is reused
/// only when its recorded training configuration matches.
fn seed_checkpoint(cfg: &TrainConfig, dir: &Path) -> Result<MlpParams> {
    let path = dir.join(format!("{}_seed{}.ckpt.json", cfg.problem, cfg.seed));
    if path.exists() {
        let (params, meta) = load_checkpoint(&path)?;
        if checkpoint_problem(&meta)?.1.as_ref() == Some(cfg) {
            return Ok(params);
        }
    }
    let (params, _) = train_with(cfg, |_, _| {})?;
    save_checkpoint(&params, &checkpoint_meta(cfg)?, &path)?;
    Ok(params)
}

/// Every (seed, k) cell of the sweep. Rows of finished cells are written to
/// `sweep.csv` even when another cell fails; the first failure in
/// seed-then-k order is returned.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if cfg.seeds.is_empty() {
        return Err(Error::Config("seeds: need at least one seed".into()));
    }
    if cfg.grid_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "grid_sizes: a sweep needs at least two grid sizes, got {:?}",
            cfg.grid_sizes
        )));
    }
    let mut estimators = cfg.estimator_set();
    estimators.bound = None;
    if !estimators.res && !estimators.fdm {
        return Err(Error::Config("estimators: a sweep needs res or fdm".into()));
    }
    let ckpt_dir = out.join("checkpoints");
    create_dir(&ckpt_dir)?;

    let trained: Vec<Result<MlpParams>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let tc = TrainConfig { seed, ..cfg.train.clone() };
            seed_checkpoint(&tc, &ckpt_dir)
        })
        .collect();

    let p = ProblemSpec::new(cfg.problem);
    let cells: Vec<(u64, usize, &Result<MlpParams>)> = cfg
        .seeds
        .iter()
        .zip(&trained)
        .flat_map(|(&s, t)| cfg.grid_sizes.iter().map(move |&k| (s, k, t)))
        .collect();
    let results: Vec<Result<Vec<SweepRow>>> = cells
        .par_iter()
        .map(|&(seed, k, params)| {
            let params = match params {
                Ok(p) => p,
                Err(e) => return Err(Error::Training {
                    iteration: 0,
                    message: format!("seed {seed} has no checkpoint: {e}"),
                }),
            };
            let grid = Grid::for_problem(&p, k, cfg.time_nodes_for(k))?;
            let net = HardConstrainedNet::new(p.clone(), params)?;
            let report = run_estimators(&net, &grid, &estimators)?;
            let row = |method: &str, v: f64| SweepRow {
                problem: cfg.problem,
                seed,
                k,
                method: method.into(),
                l2_accuracy: v,
            };
            let mut rows = Vec::new();
            if let Some(e) = &report.e_res {
                rows.push(row("res", euclidean_distance(&report.e_true, e)?));
            }
            if let Some(e) = &report.e_fdm {
                rows.push(row("fdm", euclidean_distance(&report.e_true, e)?));
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    let mut first_err = None;
    for (seed, t) in cfg.seeds.iter().zip(trained) {
        if let Err(e) = t {
            first_err.get_or_insert(Error::Training {
                iteration: 0,
                message: format!("seed {seed}: {e}"),
            });
        }
    }
    for r in results {
        match r {
            Ok(mut cell) => rows.append(&mut cell),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    write(&out.join("sweep.csv"), &sweep_csv(&rows))?;
    if cfg.plots && !rows.is_empty() {
        write(&out.join("sweep.svg"), &sweep_figure(cfg.problem, &rows))?;
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportSummary {
    /// Largest relative difference between metrics.json and the recomputation.
    pub max_metric_deviation: Option<f64>,
    pub sweep_rows: Option<usize>,
    pub plots: Vec<PathBuf>,
}

const REPORT_TOL: f64 = 1e-12;

fn compare(name: &str, stored: Option<f64>, fresh: Option<f64>, worst: &mut f64) -> Result<()> {
    match (stored, fresh) {
        (None, None) => Ok(()),
        (Some(a), Some(b)) => {
            let d = (a - b).abs() / a.abs().max(1.0);
            *worst = worst.max(d);
            if d > REPORT_TOL {
                return Err(Error::Input(format!("metrics.json {name} = {a:e} but the CSVs give {b:e}")));
            }
            Ok(())
        }
        _ => Err(Error::Input(format!("metrics.json {name} does not match the CSV files present"))),
    }
}

fn compare_curve(name: &str, stored: &Option<Vec<f64>>, fresh: &Option<Vec<f64>>, worst: &mut f64) -> Result<()> {
    match (stored, fresh) {
        (Some(a), Some(b)) if a.len() == b.len() => {
            for (x, y) in a.iter().zip(b) {
                compare(name, Some(*x), Some(*y), worst)?;
            }
            Ok(())
        }
        (None, None) => Ok(()),
        _ => Err(Error::Input(format!("metrics.json {name} does not match the CSV files present"))),
    }
}

/// Recomputes metrics.json from the field CSVs in `dir`, fails on any
/// difference above 1e-12, and redraws the plots. A `sweep.csv` in `dir` gets
/// its plot redrawn as well.
pub fn report(dir: &Path) -> Result<ReportSummary> {
    let mut summary = ReportSummary::default();
    let metrics_path = dir.join("metrics.json");
    if metrics_path.exists() {
        let m: MetricsFile = serde_json::from_str(&read(&metrics_path)?)?;
        let load = |name: &str| -> Result<Option<SpaceTimeField>> {
            let path = dir.join(format!("{name}.csv"));
            if !path.exists() {
                return Ok(None);
            }
            SpaceTimeField::from_csv(&m.grid, &read(&path)?).map(Some)
        };
        let e_true = load("e_true")?.ok_or_else(|| Error::Input("e_true.csv is missing".into()))?;
        let fields = ErrorFields {
            e_res: load("e_res")?,
            e_fdm: load("e_fdm")?,
            e_true,
        };
        let mut worst: f64 = 0.0;
        let dist = |f: &Option<SpaceTimeField>| f.as_ref().map(|e| euclidean_distance(&fields.e_true, e)).transpose();
        compare("l2_true_res", m.l2_true_res, dist(&fields.e_res)?, &mut worst)?;
        compare("l2_true_fdm", m.l2_true_fdm, dist(&fields.e_fdm)?, &mut worst)?;
        let fresh_true = Some(slice_l2_curve(&fields.e_true));
        compare_curve("l2_curves.e_true", &Some(m.l2_curves.e_true.clone()), &fresh_true, &mut worst)?;
        compare_curve("l2_curves.e_res", &m.l2_curves.e_res, &fields.e_res.as_ref().map(slice_l2_curve), &mut worst)?;
        compare_curve("l2_curves.e_fdm", &m.l2_curves.e_fdm, &fields.e_fdm.as_ref().map(slice_l2_curve), &mut worst)?;
        summary.max_metric_deviation = Some(worst);
        summary.plots.extend(write_plots(dir, &m, &fields)?);
    }
    let sweep_path = dir.join("sweep.csv");
    if sweep_path.exists() {
        let rows = read_sweep_csv(&read(&sweep_path)?)?;
        summary.sweep_rows = Some(rows.len());
        if let Some(first) = rows.first() {
            let path = dir.join("sweep.svg");
            write(&path, &sweep_figure(first.problem, &rows))?;
            summary.plots.push(path);
        }
    }
    if summary.max_metric_deviation.is_none() && summary.sweep_rows.is_none() {
        return Err(Error::Input(format!("{}: no metrics.json or sweep.csv to report on", dir.display())));
    }
    Ok(summary)
}
