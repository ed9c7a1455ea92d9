//! Static SVG rendering for loss curves and point scatters.

use std::fmt::Write as _;

use clap::ValueEnum;

use crate::nets::PointCloud;
use crate::{Error, Result};

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 160.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Orthographic projection along `axis`: the coordinate of that axis is dropped. 2D clouds
/// are returned unchanged.
pub fn project(cloud: &PointCloud, axis: Axis) -> Result<Vec<[f64; 2]>> {
    match cloud.dim() {
        2 => Ok(cloud.iter().map(|p| [p[0], p[1]]).collect()),
        3 => {
            let (a, b) = match axis {
                Axis::X => (1, 2),
                Axis::Y => (0, 2),
                Axis::Z => (0, 1),
            };
            Ok(cloud.iter().map(|p| [p[a], p[b]]).collect())
        }
        d => Err(Error::Shape(format!("can only plot 2-d or 3-d clouds, got {d}-d"))),
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// One stacked panel per column after the first, which is the shared x axis.
pub fn line_chart(names: &[String], rows: &[Vec<f64>]) -> String {
    let series = names.len().saturating_sub(1);
    let height = MARGIN + series as f64 * (PANEL_H + MARGIN);
    let width = PANEL_W + 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let (x0, x1) = range(rows.iter().map(|r| r[0]));
    for s in 0..series {
        let top = MARGIN + s as f64 * (PANEL_H + MARGIN);
        let (y0, y1) = range(rows.iter().map(|r| r[s + 1]).filter(|v| v.is_finite()));
        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN}\" y=\"{top}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#888\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{MARGIN}\" y=\"{}\">{} [{:.4e}, {:.4e}]</text>",
            top - 6.0,
            names[s + 1],
            y0,
            y1
        );
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r[s + 1].is_finite())
            .map(|r| {
                let x = MARGIN + (r[0] - x0) / (x1 - x0) * PANEL_W;
                let y = top + PANEL_H - (r[s + 1] - y0) / (y1 - y0) * PANEL_H;
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>",
            COLORS[s % COLORS.len()],
            pts.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN}\" y=\"{}\">{} [{x0}, {x1}]</text>",
        height - 8.0,
        names.first().map(String::as_str).unwrap_or("x")
    );
    svg.push_str("</svg>\n");
    svg
}

/// One marker per point; each set gets its own color.
pub fn scatter(sets: &[Vec<[f64; 2]>]) -> String {
    let side = PANEL_W;
    let (lo_x, hi_x) = range(sets.iter().flatten().map(|p| p[0]));
    let (lo_y, hi_y) = range(sets.iter().flatten().map(|p| p[1]));
    let span = (hi_x - lo_x).max(hi_y - lo_y);
    let (cx, cy) = (0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y));
    let total = side + 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\">\n<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{side}\" height=\"{side}\" fill=\"none\" stroke=\"#888\"/>\n"
    );
    for (k, set) in sets.iter().enumerate() {
        for p in set {
            let x = MARGIN + ((p[0] - cx) / span + 0.5) * side;
            let y = MARGIN + (0.5 - (p[1] - cy) / span) * side;
            let _ = writeln!(
                svg,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{}\"/>",
                COLORS[k % COLORS.len()]
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
