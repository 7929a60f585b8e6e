//! Minimal self-contained SVG line plots: axes, optional log scales,
//! polylines and shaded bands.

use std::fmt::Write;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 40.0;
const LEGEND_H: f64 = 26.0;

pub const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Shaded region between `lower` and `upper` at each `x`.
#[derive(Clone, Debug)]
pub struct Band {
    pub color: String,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

impl Series {
    pub fn new(label: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            color: color.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-300 {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            lo -= pad;
            hi += pad;
        } else if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn map(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let step = ((b - a) / 6).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi + 1e-9 * step {
                out.push(((v - self.lo) / (self.hi - self.lo), format_tick(v, step)));
                v += step;
            }
            out
        }
    }
}

fn format_tick(v: f64, step: f64) -> String {
    let v = if v.abs() < 1e-9 * step { 0.0 } else { v };
    if step >= 1.0 && v.abs() < 1e6 {
        format!("{:.0}", v)
    } else if step >= 1e-3 && v.abs() < 1e6 {
        let digits = (-step.log10().floor()) as usize;
        format!("{:.*}", digits, v)
    } else {
        format!("{:.1e}", v)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_panel(out: &mut String, p: &Panel, ox: f64, oy: f64) {
    let xs = p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)).chain(p.bands.iter().flat_map(|b| b.x.clone()));
    let ys = p
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|q| q.1))
        .chain(p.bands.iter().flat_map(|b| b.lower.iter().chain(&b.upper).copied().collect::<Vec<_>>()));
    let ax = Axis::fit(xs, p.x_log);
    let ay = Axis::fit(ys, p.y_log);
    let w = PANEL_W - MARGIN_L - MARGIN_R;
    let h = PANEL_H - MARGIN_T - MARGIN_B;
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
    let px = |f: f64| x0 + f * w;
    let py = |f: f64| y0 + (1.0 - f) * h;

    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"##,
        x0 + w / 2.0,
        oy + 18.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#000" stroke-width="1"/>"##
    );
    for (f, label) in ax.ticks() {
        let x = px(f);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{label}</text>"##,
            y0 + h,
            y0 + h + 4.0,
            y0 + h + 15.0
        );
    }
    for (f, label) in ay.ticks() {
        let y = py(f);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{label}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 3.5
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
        x0 + w / 2.0,
        y0 + h + 32.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">{}</text>"##,
        ox + 14.0,
        y0 + h / 2.0,
        ox + 14.0,
        y0 + h / 2.0,
        escape(&p.y_label)
    );

    for b in &p.bands {
        let upper: Vec<(f64, f64)> = b
            .x
            .iter()
            .zip(&b.upper)
            .filter_map(|(x, y)| Some((px(ax.map(*x)?), py(ay.map(*y)?))))
            .collect();
        let lower: Vec<(f64, f64)> = b
            .x
            .iter()
            .zip(&b.lower)
            .rev()
            .filter_map(|(x, y)| Some((px(ax.map(*x)?), py(ay.map(*y)?))))
            .collect();
        if upper.is_empty() {
            continue;
        }
        let pts: Vec<String> = upper.iter().chain(&lower).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"##,
            pts.join(" "),
            b.color
        );
    }
    for s in &p.series {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter_map(|(x, y)| Some(format!("{:.2},{:.2}", px(ax.map(*x)?), py(ay.map(*y)?))))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"##,
            pts.join(" "),
            s.color
        );
    }
}

fn legend_width(s: &Series) -> f64 {
    40.0 + 7.0 * s.label.chars().count() as f64
}

/// Lays `panels` out in a single row with a shared legend built from the
/// first panel's series, wrapped to the figure width.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len().max(1) as f64;
    let mut rows: Vec<Vec<&Series>> = vec![Vec::new()];
    let mut used = MARGIN_L;
    for s in panels.first().map(|p| p.series.as_slice()).unwrap_or(&[]) {
        if used + legend_width(s) > width && !rows.last().unwrap().is_empty() {
            rows.push(Vec::new());
            used = MARGIN_L;
        }
        used += legend_width(s);
        rows.last_mut().unwrap().push(s);
    }
    let height = PANEL_H + LEGEND_H * rows.len() as f64 + 24.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="17" text-anchor="middle" font-size="15">{}</text>"##,
        width / 2.0,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, i as f64 * PANEL_W, 24.0);
    }
    for (r, row) in rows.iter().enumerate() {
        let y = 24.0 + PANEL_H + 14.0 + LEGEND_H * r as f64;
        let mut x = MARGIN_L;
        for s in row {
            let dash = if s.dashed { r#" stroke-dasharray="6 3""# } else { "" };
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
                x + 22.0,
                s.color,
                x + 27.0,
                y + 4.0,
                escape(&s.label)
            );
            x += legend_width(s);
        }
    }
    out.push_str("</svg>\n");
    out
}
