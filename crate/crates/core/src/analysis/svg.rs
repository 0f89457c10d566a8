//! Minimal self-contained SVG 1.1 rendering of charts.

use std::fmt::Write as _;

use super::chart::{ChartMode, StabilityChart, Verdict};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn colour(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "#2b8cbe",
        Verdict::Unstable => "#f0f0f0",
        Verdict::Marginal => "#fdae61",
        Verdict::NoOrbit => "#bdbdbd",
        Verdict::Failed => "#d7191c",
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(out, r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.3}</text>"#,
            frame.px(xv),
            y0 + 16.0,
            xv
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3}</text>"#,
            x0 - 6.0,
            frame.py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Half-width of the cell around `values[i]`.
fn half_steps(values: &[f64], i: usize) -> (f64, f64) {
    let left = if i > 0 { 0.5 * (values[i] - values[i - 1]) } else if values.len() > 1 { 0.5 * (values[1] - values[0]) } else { 0.5 };
    let right = if i + 1 < values.len() { 0.5 * (values[i + 1] - values[i]) } else { left };
    (left, right)
}

pub(crate) fn render_chart(chart: &StabilityChart) -> String {
    let mut out = String::new();
    let mu = chart.metadata.mu;
    match chart.mode {
        ChartMode::RegionGrid => {
            header(&mut out, &format!("Stability region, mu = {mu}"));
            let n_a = chart.a_values.len();
            let x = extent(chart.amplitudes.iter().enumerate().flat_map(|(i, &v)| {
                let (l, r) = half_steps(&chart.amplitudes, i);
                [v - l, v + r]
            }));
            let y = extent(chart.a_values.iter().enumerate().flat_map(|(j, &v)| {
                let (l, r) = half_steps(&chart.a_values, j);
                [v - l, v + r]
            }));
            let frame = Frame { x, y };
            for (idx, cell) in chart.cells.iter().enumerate() {
                let (i, j) = (idx / n_a.max(1), idx % n_a.max(1));
                if i >= chart.amplitudes.len() || j >= n_a {
                    continue;
                }
                let (al, ar) = half_steps(&chart.amplitudes, i);
                let (bl, br) = half_steps(&chart.a_values, j);
                let x0 = frame.px(chart.amplitudes[i] - al);
                let x1 = frame.px(chart.amplitudes[i] + ar);
                let y0 = frame.py(chart.a_values[j] + br);
                let y1 = frame.py(chart.a_values[j] - bl);
                let _ = writeln!(
                    out,
                    r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    (x1 - x0).max(0.0),
                    (y1 - y0).max(0.0),
                    colour(cell.verdict)
                );
            }
            axes(&mut out, &frame, "A (rad)", "a");
        }
        ChartMode::CriticalCurve => {
            header(&mut out, &format!("Critical amplitude, mu = {mu}"));
            let frame = Frame {
                x: extent(chart.cells.iter().map(|c| c.amplitude)),
                y: extent(chart.cells.iter().map(|c| c.a)),
            };
            polyline(&mut out, &frame, chart, "#2b8cbe");
            axes(&mut out, &frame, "A (rad)", "a*");
        }
        ChartMode::BifurcationScan => {
            header(&mut out, &format!("Periodic orbits, mu = {mu}"));
            let frame = Frame {
                x: extent(chart.cells.iter().map(|c| c.a)),
                y: extent(chart.cells.iter().filter_map(|c| c.orbit.map(|o| o.phi0))),
            };
            for c in &chart.cells {
                if let Some(o) = c.orbit {
                    let fill = if c.verdict == Verdict::Stable { "#2b8cbe" } else { "none" };
                    let _ = writeln!(
                        out,
                        r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="#333"/>"##,
                        frame.px(c.a),
                        frame.py(o.phi0)
                    );
                }
            }
            axes(&mut out, &frame, "a", "phi0 (rad)");
        }
    }
    out.push_str("</svg>\n");
    out
}

fn polyline(out: &mut String, frame: &Frame, chart: &StabilityChart, stroke: &str) {
    let pts: Vec<String> = chart
        .cells
        .iter()
        .filter(|c| c.a.is_finite())
        .map(|c| format!("{:.2},{:.2}", frame.px(c.amplitude), frame.py(c.a)))
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#, pts.join(" "));
}

/// Several critical curves on one set of axes.
pub fn render_curves(curves: &[StabilityChart]) -> String {
    let palette = ["#2b8cbe", "#d7191c", "#1a9641", "#7b3294", "#fdae61"];
    let mut out = String::new();
    header(&mut out, "Critical amplitude");
    let frame = Frame {
        x: extent(curves.iter().flat_map(|c| c.cells.iter().map(|x| x.amplitude))),
        y: extent(curves.iter().flat_map(|c| c.cells.iter().map(|x| x.a))),
    };
    for (k, chart) in curves.iter().enumerate() {
        let stroke = palette[k % palette.len()];
        polyline(&mut out, &frame, chart, stroke);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{stroke}">mu = {}</text>"#,
            LEFT + 10.0,
            TOP + 14.0 * (k as f64 + 1.0),
            chart.metadata.mu
        );
    }
    axes(&mut out, &frame, "A (rad)", "a*");
    out.push_str("</svg>\n");
    out
}
