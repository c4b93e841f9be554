//! Minimal SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::write_atomic;
use super::sweep::SummaryRow;
use crate::engine::TrajectoryPoint;
use crate::error::{domain_err, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// Mean generations over λ, one series per controller.
    RuntimeVsLambda,
    /// Interquartile range of generations over λ.
    IqrVsLambda,
    /// Rate over fitness distance, one series per run; log-scale rate axis.
    RateVsFitness,
}

impl PlotKind {
    fn labels(&self) -> (&'static str, &'static str, &'static str) {
        match self {
            Self::RuntimeVsLambda => ("average runtime", "lambda", "generations"),
            Self::IqrVsLambda => ("interquartile range", "lambda", "generations (q3 - q1)"),
            Self::RateVsFitness => ("rate over fitness", "fitness distance", "rate r"),
        }
    }

    pub fn log_y(&self) -> bool {
        matches!(self, Self::RateVsFitness)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn summary_label(row: &SummaryRow) -> String {
    let mut label = format!("{} n={}", row.controller, row.n);
    if let Some(f) = row.factor {
        let _ = write!(label, " F={f}");
    }
    label
}

/// One series per (controller, n, F), in first-appearance order.
pub fn series_from_summaries(rows: &[SummaryRow], kind: PlotKind) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for row in rows {
        let label = summary_label(row);
        let y = match kind {
            PlotKind::IqrVsLambda => row.q3 - row.q1,
            _ => row.mean_generations,
        };
        let point = (row.lambda as f64, y);
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => out.push(Series {
                label,
                points: vec![point],
            }),
        }
    }
    out
}

/// Rate over fitness distance for one trajectory.
pub fn series_from_trajectory(label: impl Into<String>, points: &[TrajectoryPoint]) -> Series {
    Series {
        label: label.into(),
        points: points.iter().map(|p| (p.k as f64, p.r)).collect(),
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    /// Position in `[0, 1]` along the axis.
    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let first = self.lo.ceil() as i32;
            let last = self.hi.floor() as i32;
            if last >= first {
                return (first..=last).map(|e| 10f64.powi(e)).collect();
            }
            return vec![10f64.powf(self.lo), 10f64.powf(self.hi)];
        }
        (0..=5)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0)
            .collect()
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `series` as a standalone SVG document.
pub fn render_svg(series: &[Series], kind: PlotKind) -> Result<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return domain_err("nothing to plot");
    }
    let log_y = kind.log_y();
    let all = || series.iter().flat_map(|s| s.points.iter().copied());
    if all().any(|(x, y)| !x.is_finite() || !y.is_finite() || (log_y && y <= 0.0)) {
        return domain_err("plot data must be finite (and positive on a log axis)");
    }
    let x_axis = Axis::new(all().map(|p| p.0), false);
    let y_axis = Axis::new(all().map(|p| p.1), log_y);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x_axis.frac(x) * plot_w;
    let py = |y: f64| TOP + (1.0 - y_axis.frac(y)) * plot_h;
    let (title, x_label, y_label) = kind.labels();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, LEFT + plot_w / 2.0);
    // axes
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for t in x_axis.ticks() {
        let x = px(t);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 20.0, fmt_tick(t));
    }
    for t in y_axis.ticks() {
        let y = py(t);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    // series
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 25.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Plain-data companion of a plot: `series,x,y` rows.
pub fn render_data(series: &[Series]) -> String {
    let mut out = String::from("series,x,y\n");
    for s in series {
        let label = if s.label.contains([',', '"']) {
            format!("\"{}\"", s.label.replace('"', "\"\""))
        } else {
            s.label.clone()
        };
        for (x, y) in &s.points {
            let _ = writeln!(out, "{label},{x},{y}");
        }
    }
    out
}

/// Writes the SVG to `svg_path` and its data to `<svg_path>.csv`.
pub fn emit_plot(series: &[Series], kind: PlotKind, svg_path: &Path) -> Result<()> {
    let svg = render_svg(series, kind)?;
    let mut data_name = svg_path.file_name().unwrap_or_default().to_os_string();
    data_name.push(".csv");
    write_atomic(svg_path, svg.as_bytes())?;
    write_atomic(&svg_path.with_file_name(data_name), render_data(series).as_bytes())
}
