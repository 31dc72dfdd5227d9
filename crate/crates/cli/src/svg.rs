//! Minimal standalone SVG plots.

use std::fmt::Write;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps data bounds onto the drawable square, y pointing up.
struct Frame {
    lo: [f64; 2],
    span: [f64; 2],
}

impl Frame {
    fn around(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let mut span = [0.0; 2];
        for k in 0..2 {
            if !lo[k].is_finite() {
                lo[k] = -1.0;
                hi[k] = 1.0;
            }
            span[k] = hi[k] - lo[k];
            if span[k] <= 0.0 {
                lo[k] -= 0.5;
                span[k] = 1.0;
            }
        }
        Self { lo, span }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let w = SIZE - 2.0 * MARGIN;
        (
            MARGIN + (p[0] - self.lo[0]) / self.span[0] * w,
            SIZE - MARGIN - (p[1] - self.lo[1]) / self.span[1] * w,
        )
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
}

/// Scatter plot with one colour per distinct label, in order of first appearance.
pub fn scatter(title: &str, points: &[[f64; 2]], labels: &[String]) -> String {
    let mut order: Vec<&str> = Vec::new();
    for l in labels {
        if !order.contains(&l.as_str()) {
            order.push(l);
        }
    }
    let frame = Frame::around(points.iter().copied());
    let mut out = String::new();
    header(&mut out, title);
    for (p, l) in points.iter().zip(labels) {
        let idx = order.iter().position(|o| o == l).unwrap_or(0);
        let (x, y) = frame.map(*p);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            PALETTE[idx % PALETTE.len()]
        );
    }
    for (k, l) in order.iter().enumerate() {
        let y = 44.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{y}" r="4" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            SIZE - 110.0,
            PALETTE[k % PALETTE.len()],
            SIZE - 100.0,
            y + 4.0,
            escape(l)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Cost heat map over the `(alpha, beta)` grid with the trajectory drawn on top.
///
/// `cells` are `(alpha, beta, cost)` with `None` marking failed evaluations,
/// ordered beta-outer over a `resolution × resolution` grid.
pub fn contour(
    title: &str,
    cells: &[(f64, f64, Option<f64>)],
    resolution: usize,
    trajectory: &[[f64; 2]],
) -> String {
    let frame = Frame::around(cells.iter().map(|c| [c.0, c.1]));
    let (lo, hi) = cells
        .iter()
        .filter_map(|c| c.2)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    let cell = (SIZE - 2.0 * MARGIN) / (resolution.max(2) - 1) as f64;
    let mut out = String::new();
    header(&mut out, title);
    for &(a, b, cost) in cells {
        let (x, y) = frame.map([a, b]);
        let fill = match cost {
            Some(v) => {
                let t = (v - lo) / range;
                let r = (40.0 + 215.0 * t) as u8;
                let g = (60.0 + 120.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8;
                let bl = (230.0 - 200.0 * t) as u8;
                format!("#{r:02x}{g:02x}{bl:02x}")
            }
            None => "#000000".to_string(),
        };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x - cell / 2.0,
            y - cell / 2.0,
            cell,
            cell
        );
    }
    if !trajectory.is_empty() {
        let path: Vec<String> = trajectory
            .iter()
            .map(|p| {
                let (x, y) = frame.map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="white" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        let (x, y) = frame.map(*trajectory.last().expect("non-empty"));
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="red"/>"#);
    }
    out.push_str("</svg>\n");
    out
}
