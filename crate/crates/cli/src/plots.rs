//! Figure layouts built on [`crate::svg`].

use errmap_core::errormap::MetricsFile;
use errmap_core::fdm::SpaceTimeField;
use errmap_core::problems::ProblemId;

use crate::commands::SweepRow;
use crate::svg::{render, Band, Panel, Series, PALETTE};

pub struct ErrorFields {
    pub e_true: SpaceTimeField,
    pub e_res: Option<SpaceTimeField>,
    pub e_fdm: Option<SpaceTimeField>,
}

impl ErrorFields {
    fn labelled(&self) -> Vec<(&'static str, &str, &SpaceTimeField, bool)> {
        let mut out = vec![("e_true", PALETTE[0], &self.e_true, false)];
        if let Some(f) = &self.e_res {
            out.push(("e_res", PALETTE[1], f, true));
        }
        if let Some(f) = &self.e_fdm {
            out.push(("e_FDM", PALETTE[2], f, true));
        }
        out
    }
}

fn profile_panel(title: String, fields: &ErrorFields, line: impl Fn(&SpaceTimeField) -> Vec<(f64, f64)>) -> Panel {
    Panel {
        title,
        x_label: "x".into(),
        y_label: "error".into(),
        series: fields
            .labelled()
            .into_iter()
            .map(|(label, color, f, dashed)| {
                let s = Series::new(label, color, line(f));
                if dashed {
                    s.dashed()
                } else {
                    s
                }
            })
            .collect(),
        ..Panel::default()
    }
}

/// Error profiles: four time slices near `t = 0.25, 0.5, 0.75, 1` for
/// evolution problems, one profile for the 1D steady problem and three
/// `y = const` cuts for the 2D one.
pub fn slices_figure(problem: ProblemId, fields: &ErrorFields) -> String {
    let g = &fields.e_true.grid;
    let k = g.k;
    let xs: Vec<f64> = (0..k).map(|i| g.x(i)).collect();
    let panels: Vec<Panel> = if !g.is_steady() {
        [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|frac| {
                let n = g.nearest_time_index(frac * g.t_max);
                profile_panel(format!("t = {:.4}", g.t(n)), fields, |f| {
                    xs.iter().copied().zip(f.slice(n).iter().copied()).collect()
                })
            })
            .collect()
    } else if g.dims == 1 {
        vec![profile_panel("profile".into(), fields, |f| xs.iter().copied().zip(f.values.iter().copied()).collect())]
    } else {
        [0.25, 0.5, 0.75]
            .iter()
            .map(|y| {
                let j = (y * (k - 1) as f64).round() as usize;
                profile_panel(format!("y = {:.4}", g.x(j)), fields, |f| {
                    xs.iter().copied().zip(f.values[j * k..(j + 1) * k].iter().copied()).collect()
                })
            })
            .collect()
    };
    render(&format!("{problem}: error profiles on a {k}-node grid"), &panels)
}

/// Spatial L2 norm of each error field over time, with the bound when present.
pub fn l2_over_time_figure(m: &MetricsFile) -> Option<String> {
    if m.grid.is_steady() {
        return None;
    }
    let c = &m.l2_curves;
    let pairs = |v: &[f64]| c.t.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let mut series = vec![Series::new("||e_true||", PALETTE[0], pairs(&c.e_true))];
    if let Some(v) = &c.e_res {
        series.push(Series::new("||e_res||", PALETTE[1], pairs(v)).dashed());
    }
    if let Some(v) = &c.e_fdm {
        series.push(Series::new("||e_FDM||", PALETTE[2], pairs(v)).dashed());
    }
    if let Some(b) = &m.bound_curve {
        series.push(Series::new("bound", PALETTE[3], b.clone()));
    }
    let panel = Panel {
        title: "spatial L2 norm".into(),
        x_label: "t".into(),
        y_label: "L2 norm".into(),
        y_log: true,
        series,
        ..Panel::default()
    };
    Some(render(&format!("{}: error norms over time", m.problem), &[panel]))
}

/// Mean and sample standard deviation over seeds, per grid size.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Log-log accuracy against grid size, mean line with a ±1σ band per method.
pub fn sweep_figure(problem: ProblemId, rows: &[SweepRow]) -> String {
    let mut methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    methods.sort();
    methods.dedup();
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.sort();
    ks.dedup();
    let mut panel = Panel {
        title: "||e_true - e_method|| over grid nodes".into(),
        x_label: "k".into(),
        y_label: "L2 accuracy".into(),
        x_log: true,
        y_log: true,
        ..Panel::default()
    };
    for (i, method) in methods.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let stats: Vec<(f64, f64, f64)> = ks
            .iter()
            .filter_map(|&k| {
                let v: Vec<f64> =
                    rows.iter().filter(|r| r.k == k && r.method == *method).map(|r| r.l2_accuracy).collect();
                (!v.is_empty()).then(|| {
                    let (m, s) = mean_std(&v);
                    (k as f64, m, s)
                })
            })
            .collect();
        panel.series.push(Series::new(method, color, stats.iter().map(|(k, m, _)| (*k, *m)).collect()));
        panel.bands.push(Band {
            color: color.into(),
            x: stats.iter().map(|s| s.0).collect(),
            lower: stats.iter().map(|(_, m, s)| m - s).collect(),
            upper: stats.iter().map(|(_, m, s)| m + s).collect(),
        });
    }
    let seeds = {
        let mut s: Vec<u64> = rows.iter().map(|r| r.seed).collect();
        s.sort();
        s.dedup();
        s.len()
    };
    render(&format!("{problem}: grid-size sweep over {seeds} seed(s)"), &[panel])
}
