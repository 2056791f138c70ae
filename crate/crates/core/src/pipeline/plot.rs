//! Line charts of up to four aligned series as standalone SVG.
//!
//! The first series uses the left axis; any others share the right axis.
//! A sibling CSV holds the plotted points, preceded by `#` lines giving
//! each axis range.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::series::{align_all, TimeSeries};

pub const MAX_PLOT_SERIES: usize = 4;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; MAX_PLOT_SERIES] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisScale {
    pub side: String,
    pub labels: Vec<String>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotOutput {
    pub svg: PathBuf,
    pub csv: PathBuf,
    pub axes: Vec<AxisScale>,
    pub years: (i64, i64),
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick step of the form {1, 2, 5}·10^k giving roughly `target` intervals.
fn nice_step(range: f64, target: f64) -> f64 {
    let raw = range / target;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64, target: f64) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo, target);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    (out, decimals)
}

pub fn render_svg(series: &[TimeSeries]) -> Result<(String, Vec<AxisScale>), PipelineError> {
    if series.is_empty() || series.len() > MAX_PLOT_SERIES {
        return Err(PipelineError::Config(format!(
            "plot takes 1 to {MAX_PLOT_SERIES} series, got {}",
            series.len()
        )));
    }
    let aligned = align_all(series)?;
    let first = aligned[0].start();
    let last = aligned[0].end();
    let x_span = ((last - first) as f64).max(1.0);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |year: i64| LEFT + (year - first) as f64 / x_span * plot_w;

    let mut axes = vec![{
        let (min, max) = padded_range(aligned[0].values().iter().copied());
        AxisScale {
            side: "left".into(),
            labels: vec![aligned[0].label().to_string()],
            min,
            max,
        }
    }];
    if aligned.len() > 1 {
        let (min, max) = padded_range(aligned[1..].iter().flat_map(|s| s.values().iter().copied()));
        axes.push(AxisScale {
            side: "right".into(),
            labels: aligned[1..].iter().map(|s| s.label().to_string()).collect(),
            min,
            max,
        });
    }
    let y_of = |axis: &AxisScale, v: f64| TOP + (axis.max - v) / (axis.max - axis.min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );

    // year axis
    let (xticks, _) = ticks(first as f64, last as f64, 8.0);
    for t in xticks {
        let x = LEFT + (t - first as f64) / x_span * plot_w;
        let y = TOP + plot_h;
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y + 5.0,
            y + 20.0,
            t.round() as i64
        );
    }

    for (ai, axis) in axes.iter().enumerate() {
        let (yt, decimals) = ticks(axis.min, axis.max, 6.0);
        let (x, anchor, dx) = if ai == 0 {
            (LEFT, "end", -8.0)
        } else {
            (WIDTH - RIGHT, "start", 8.0)
        };
        let color = if axis.labels.len() == 1 { COLORS[ai] } else { "#444" };
        for t in yt {
            let y = y_of(axis, t);
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}"/><text x="{:.2}" y="{:.2}" text-anchor="{anchor}" fill="{color}">{t:.decimals$}</text>"#,
                x + dx / 2.0,
                x + dx,
                y + 4.0,
            );
        }
    }

    for (si, s) in aligned.iter().enumerate() {
        let axis = &axes[usize::from(si > 0)];
        let points: Vec<String> = s
            .iter()
            .map(|(year, v)| format!("{:.2},{:.2}", x_of(year), y_of(axis, v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[si],
            points.join(" ")
        );
        let ly = 18.0 + 14.0 * si as f64;
        let side = if si == 0 { "left" } else { "right" };
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{} ({side} axis)</text>"#,
            LEFT + 20.0,
            COLORS[si],
            LEFT + 26.0,
            ly + 4.0,
            escape(s.label())
        );
    }
    svg.push_str("</svg>\n");
    Ok((svg, axes))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(series: &[TimeSeries], axes: &[AxisScale]) -> Result<String, PipelineError> {
    let aligned = align_all(series)?;
    let mut out = String::new();
    for a in axes {
        let _ = writeln!(out, "# axis={} series={} min={} max={}", a.side, a.labels.join(";"), a.min, a.max);
    }
    let header: Vec<String> = aligned.iter().map(|s| csv_field(s.label())).collect();
    let _ = writeln!(out, "year,{}", header.join(","));
    for i in 0..aligned[0].len() {
        let row: Vec<String> = aligned.iter().map(|s| s.values()[i].to_string()).collect();
        let _ = writeln!(out, "{},{}", aligned[0].start() + i as i64, row.join(","));
    }
    Ok(out)
}

/// Writes `path` (SVG) and `path` with a `.csv` extension.
pub fn emit_plot(series: &[TimeSeries], path: &Path) -> Result<PlotOutput, PipelineError> {
    let (svg, axes) = render_svg(series)?;
    let csv = render_csv(series, &axes)?;
    let csv_path = path.with_extension("csv");
    super::write_file(path, &svg)?;
    super::write_file(&csv_path, &csv)?;
    let aligned = align_all(series)?;
    Ok(PlotOutput {
        svg: path.to_path_buf(),
        csv: csv_path,
        axes,
        years: (aligned[0].start(), aligned[0].end()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(label: &str, start: i64, n: usize, f: impl Fn(usize) -> f64) -> TimeSeries {
        TimeSeries::new(label, start, (0..n).map(f).collect()).unwrap()
    }

    #[test]
    fn dual_axis_overlay() {
        let a = s("ln gdp", 1900, 100, |i| 8.0 + 0.02 * i as f64);
        let b = s("ln <leb>", 1910, 90, |i| 3.6 + 0.005 * i as f64);
        let dir = tempfile::tempdir().unwrap();
        let out = emit_plot(&[a, b], &dir.path().join("p.svg")).unwrap();
        assert_eq!(out.years, (1910, 1999));
        assert_eq!(out.axes.len(), 2);
        let svg = std::fs::read_to_string(&out.svg).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("ln &lt;leb&gt; (right axis)"));
        let csv = std::fs::read_to_string(&out.csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# axis=left series=ln gdp"));
        assert_eq!(lines[2], "year,ln gdp,ln <leb>");
        assert_eq!(lines.len(), 3 + 90);
        assert!(lines[3].starts_with("1910,"));
    }

    #[test]
    fn single_series_single_axis_and_arity_cap() {
        let a = s("a", 2000, 20, |i| i as f64);
        let (svg, axes) = render_svg(&[a.clone()]).unwrap();
        assert_eq!(axes.len(), 1);
        assert!(!svg.contains("right axis"));
        let many = vec![a.clone(), a.clone(), a.clone(), a.clone(), a];
        assert!(matches!(render_svg(&many), Err(PipelineError::Config(_))));
        assert!(render_svg(&[]).is_err());
    }

    #[test]
    fn constant_series_gets_a_range() {
        let a = s("flat", 2000, 20, |_| 2.0);
        let (_, axes) = render_svg(&[a]).unwrap();
        assert!(axes[0].min < 2.0 && axes[0].max > 2.0);
        let (t, d) = ticks(0.0, 1.0, 5.0);
        assert_eq!(t.len(), 6);
        assert_eq!(d, 1);
    }
}
