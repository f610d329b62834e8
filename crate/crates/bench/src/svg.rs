//! Minimal standalone SVG line charts.
//!
//! The root element records the data bounds and the plot frame so that the
//! polylines can be mapped back to data coordinates by [`parse_series`].

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{BenchError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = ["#1b3a6b", "#17a2b8", "#2f6fdf", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn fit(series: &[Series]) -> Self {
        let pts = series.iter().flat_map(|s| s.points.iter());
        let (mut x_min, mut x_max, mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !x_min.is_finite() {
            return Self {
                x_min: 0.0,
                x_max: 1.0,
                y_min: 0.0,
                y_max: 1.0,
            };
        }
        let (x_min, x_max) = widen(x_min, x_max);
        let (y_min, y_max) = widen(y_min, y_max);
        Self { x_min, x_max, y_min, y_max }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            LEFT + (x - self.x_min) / (self.x_max - self.x_min) * Self::plot_w(),
            TOP + (self.y_max - y) / (self.y_max - self.y_min) * Self::plot_h(),
        )
    }

    fn data(&self, px: f64, py: f64) -> (f64, f64) {
        (
            self.x_min + (px - LEFT) / Self::plot_w() * (self.x_max - self.x_min),
            self.y_max - (py - TOP) / Self::plot_h() * (self.y_max - self.y_min),
        )
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn unescape(s: &str) -> String {
    s.replace("&quot;", "\"").replace("&gt;", ">").replace("&lt;", "<").replace("&amp;", "&")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn render_svg(fig: &Figure) -> Result<String> {
    for s in &fig.series {
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(BenchError::Config(format!("series `{}` has non-finite points", s.label)));
        }
    }
    let f = Frame::fit(&fig.series);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-bounds="{:e} {:e} {:e} {:e}">"#,
        f.x_min, f.x_max, f.y_min, f.y_max
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        LEFT + Frame::plot_w() / 2.0,
        escape(&fig.title)
    );
    let (x0, y0) = (LEFT, TOP + Frame::plot_h());
    let _ = writeln!(
        out,
        r##"<g class="axes" stroke="#333" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}"/><line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}"/></g>"##,
        LEFT + Frame::plot_w()
    );
    out.push_str(r#"<g class="ticks" font-family="sans-serif" font-size="11">"#);
    out.push('\n');
    for i in 0..TICKS {
        let t = i as f64 / (TICKS - 1) as f64;
        let xv = f.x_min + t * (f.x_max - f.x_min);
        let yv = f.y_min + t * (f.y_max - f.y_min);
        let (xp, _) = f.px(xv, f.y_min);
        let (_, yp) = f.px(f.x_min, yv);
        let _ = writeln!(
            out,
            r##"<line x1="{xp:.3}" y1="{y0}" x2="{xp:.3}" y2="{}" stroke="#333"/><text x="{xp:.3}" y="{}" text-anchor="middle">{}</text>"##,
            y0 + 5.0,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{yp:.3}" x2="{x0}" y2="{yp:.3}" stroke="#333"/><text x="{}" y="{:.3}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        LEFT + Frame::plot_w() / 2.0,
        HEIGHT - 12.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + Frame::plot_h() / 2.0,
        TOP + Frame::plot_h() / 2.0,
        escape(&fig.y_label)
    );
    for (k, s) in fig.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = f.px(x, y);
                format!("{px:.4},{py:.4}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-label="{}" fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            escape(&s.label),
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2.5"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(fig: &Figure, path: &Path) -> Result<()> {
    let text = render_svg(fig)?;
    deepc_core::io::write_text(path, &text)?;
    Ok(())
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    let len = tag[start..].find('"')?;
    Some(&tag[start..start + len])
}

/// Recovers the series of an SVG written by [`render_svg`], in data coordinates.
pub fn parse_series(svg: &str) -> Result<Vec<Series>> {
    let bad = |msg: &str| BenchError::Config(format!("not a chart produced by this module: {msg}"));
    let root_end = svg.find('>').ok_or_else(|| bad("no root element"))?;
    let bounds: Vec<f64> = attr(&svg[..root_end], "data-bounds")
        .ok_or_else(|| bad("missing data-bounds"))?
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| bad("unparsable bounds")))
        .collect::<Result<_>>()?;
    let [x_min, x_max, y_min, y_max] = bounds[..] else {
        return Err(bad("expected four bounds"));
    };
    let frame = Frame { x_min, x_max, y_min, y_max };
    let mut out = Vec::new();
    let mut rest = svg;
    while let Some(pos) = rest.find("<polyline") {
        let end = rest[pos..].find("/>").ok_or_else(|| bad("unterminated polyline"))? + pos;
        let tag = &rest[pos..end];
        let label = unescape(attr(tag, "data-label").unwrap_or_default());
        let mut points = Vec::new();
        for pair in attr(tag, "points").unwrap_or_default().split_whitespace() {
            let (px, py) = pair.split_once(',').ok_or_else(|| bad("malformed point"))?;
            let px: f64 = px.parse().map_err(|_| bad("malformed point"))?;
            let py: f64 = py.parse().map_err(|_| bad("malformed point"))?;
            points.push(frame.data(px, py));
        }
        out.push(Series { label, points });
        rest = &rest[end..];
    }
    Ok(out)
}
