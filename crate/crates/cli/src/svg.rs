//! Minimal SVG 1.1 plots: line and scatter series plus a class raster.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#000000",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Empty names are left out of the legend.
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: String,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>, style: Style, color: &str) -> Self {
        Self {
            name: name.to_string(),
            points,
            style,
            color: color.to_string(),
        }
    }
}

/// Filled cells on a regular grid. `cells[i * ys.len() + j]` indexes `classes`
/// for the cell centred at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub cells: Vec<usize>,
    pub classes: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub raster: Option<Raster>,
    pub provenance: Vec<(String, String)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions on a 1-2-5 ladder covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span.is_finite() && span > 0.0) {
        return vec![lo];
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(x: f64, step: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let ax = x.abs();
    if !(1e-3..1e4).contains(&ax) {
        return format!("{x:.1e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{x:.decimals$}")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn bounds(plot: &Plot) -> Option<Frame> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in &plot.series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    if let Some(r) = &plot.raster {
        let half = |v: &[f64]| {
            if v.len() > 1 {
                0.5 * (v[1] - v[0])
            } else {
                0.5
            }
        };
        let (hx, hy) = (half(&r.xs), half(&r.ys));
        for &x in &r.xs {
            xs.extend([x - hx, x + hx]);
        }
        for &y in &r.ys {
            ys.extend([y - hy, y + hy]);
        }
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() {
        return None;
    }
    let (x0, x1) = if plot.raster.is_some() {
        (min(&xs), max(&xs))
    } else {
        padded(min(&xs), max(&xs))
    };
    let (y0, y1) = if plot.raster.is_some() {
        (min(&ys), max(&ys))
    } else {
        padded(min(&ys), max(&ys))
    };
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { padded(x0, x1) };
    let (y0, y1) = if y1 > y0 { (y0, y1) } else { padded(y0, y1) };
    Some(Frame { x0, x1, y0, y1 })
}

/// Splits a series into runs of finite points.
fn finite_runs(points: &[(f64, f64)]) -> Vec<&[(f64, f64)]> {
    points
        .split(|(x, y)| !(x.is_finite() && y.is_finite()))
        .filter(|run| !run.is_empty())
        .collect()
}

pub fn render_svg(plot: &Plot) -> Result<String> {
    if plot.series.is_empty() && plot.raster.is_none() {
        bail!("empty series set");
    }
    let f = bounds(plot).context("no finite data to plot")?;
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    for (k, v) in &plot.provenance {
        writeln!(s, "<!-- {}: {} -->", escape(k), escape(v))?;
    }
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )?;

    if let Some(r) = &plot.raster {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
        let (dx, dy) = (step(&r.xs), step(&r.ys));
        writeln!(s, r#"<g class="raster" stroke="none">"#)?;
        for (i, &x) in r.xs.iter().enumerate() {
            for (j, &y) in r.ys.iter().enumerate() {
                let class = r.cells[i * r.ys.len() + j];
                let fill = &r.classes[class].1;
                let (xa, xb) = (f.px(x - 0.5 * dx), f.px(x + 0.5 * dx));
                let (ya, yb) = (f.py(y + 0.5 * dy), f.py(y - 0.5 * dy));
                writeln!(
                    s,
                    r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    xb - xa,
                    yb - ya
                )?;
            }
        }
        writeln!(s, "</g>")?;
    }

    let (plot_x1, plot_y0) = (WIDTH - RIGHT, HEIGHT - BOTTOM);
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        plot_x1 - LEFT,
        plot_y0 - TOP
    )?;

    let xt = nice_ticks(f.x0, f.x1, 8);
    let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
    for &t in &xt {
        let x = f.px(t);
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{plot_y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            plot_y0 + 5.0
        )?;
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            plot_y0 + 18.0,
            tick_label(t, xstep)
        )?;
    }
    let yt = nice_ticks(f.y0, f.y1, 6);
    let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
    for &t in &yt {
        let y = f.py(t);
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        )?;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t, ystep)
        )?;
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (LEFT + plot_x1),
        HEIGHT - 15.0,
        escape(&plot.x_label)
    )?;
    writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        0.5 * (TOP + plot_y0),
        0.5 * (TOP + plot_y0),
        escape(&plot.y_label)
    )?;
    writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        0.5 * (LEFT + plot_x1),
        escape(&plot.title)
    )?;

    writeln!(
        s,
        r#"<clipPath id="frame"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath>"#,
        plot_x1 - LEFT,
        plot_y0 - TOP
    )?;
    writeln!(s, r#"<g clip-path="url(#frame)">"#)?;
    for series in &plot.series {
        match series.style {
            Style::Scatter => {
                for &(x, y) in &series.points {
                    if x.is_finite() && y.is_finite() {
                        writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                            f.px(x),
                            f.py(y),
                            series.color
                        )?;
                    }
                }
            }
            Style::Line | Style::Dashed => {
                let dash = if series.style == Style::Dashed {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                };
                for run in finite_runs(&series.points) {
                    let mut d = String::new();
                    for (k, &(x, y)) in run.iter().enumerate() {
                        let cmd = if k == 0 { 'M' } else { 'L' };
                        write!(d, "{cmd}{:.2} {:.2} ", f.px(x), f.py(y))?;
                    }
                    writeln!(
                        s,
                        r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                        d.trim_end(),
                        series.color
                    )?;
                }
            }
        }
    }
    writeln!(s, "</g>")?;

    let mut entries: Vec<(&str, &str, Option<Style>)> = plot
        .series
        .iter()
        .filter(|x| !x.name.is_empty())
        .map(|x| (x.name.as_str(), x.color.as_str(), Some(x.style)))
        .collect();
    if let Some(r) = &plot.raster {
        entries.extend(
            r.classes
                .iter()
                .map(|(n, c)| (n.as_str(), c.as_str(), None)),
        );
    }
    writeln!(s, r#"<g class="legend">"#)?;
    for (k, (name, color, style)) in entries.iter().enumerate() {
        let x = plot_x1 + 12.0;
        let y = TOP + 10.0 + 20.0 * k as f64;
        match style {
            Some(Style::Scatter) => writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#,
                x + 12.0
            )?,
            Some(st) => {
                let dash = if *st == Style::Dashed {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                };
                writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    x + 24.0
                )?
            }
            None => writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="24" height="12" fill="{color}"/>"#,
                y - 6.0
            )?,
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(name)
        )?;
    }
    writeln!(s, "</g>")?;
    writeln!(s, "</svg>")?;
    Ok(s)
}

pub fn emit_svg(plot: &Plot, path: &Path) -> Result<()> {
    let text = render_svg(plot)?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
