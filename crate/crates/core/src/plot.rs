//! Minimal SVG writer: axes, scatter and step-histogram plots.
//! Output is deterministic: fixed float formatting and no timestamps.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, idx: usize) -> Self {
        Series { label: label.into(), points, color: color(idx).to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn fit(series: &[Series], log_x: bool) -> Frame {
        let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let tx = |x: f64| if log_x { x.max(1e-300).log10() } else { x };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1, log_x }
    }

    fn px(&self, x: f64) -> f64 {
        let x = if self.log_x { x.max(1e-300).log10() } else { x };
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, axes: &Axes, f: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let vx = if f.log_x { 10f64.powf(fx) } else { fx };
        let (xp, yp) = (f.px(vx), f.py(fy));
        let _ = writeln!(out, r#"<line x1="{xp:.2}" y1="{b}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, b + 18.0, tick(vx));
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{yp:.2}" x2="{l}" y2="{yp:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, yp + 4.0, tick(fy));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, esc(&axes.title));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, esc(&axes.x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        esc(&axes.y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, series: &[Series]) {
    for (i, s) in series.iter().enumerate() {
        if s.label.is_empty() {
            continue;
        }
        let y = MARGIN + 14.0 * i as f64;
        let x = WIDTH - MARGIN + 6.0;
        let _ = writeln!(out, r#"<rect x="{x:.2}" y="{:.2}" width="8" height="8" fill="{}"/>"#, y - 8.0, s.color);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}" font-size="10">{}</text>"#, x + 11.0, esc(&s.label));
    }
}

pub fn scatter(series: &[Series], axes: &Axes) -> String {
    scatter_with_line(series, None, axes)
}

/// Scatter plot with an optional polyline (drawn in black) over it.
pub fn scatter_with_line(series: &[Series], line: Option<&[(f64, f64)]>, axes: &Axes) -> String {
    let mut all = series.to_vec();
    if let Some(l) = line {
        all.push(Series { label: String::new(), points: l.to_vec(), color: String::new() });
    }
    let f = Frame::fit(&all, axes.log_x);
    let mut out = String::new();
    header(&mut out, axes, &f);
    for s in series {
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#, f.px(x), f.py(y), s.color);
        }
    }
    if let Some(l) = line.filter(|l| !l.is_empty()) {
        let d: Vec<String> = l.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, d.join(" "));
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// Step histograms sharing bucket edges; `series[i].points` holds
/// `(left edge, height)` per bucket and `right` closes the last bucket.
pub fn step_histogram(series: &[Series], right: f64, axes: &Axes) -> String {
    let mut framed = series.to_vec();
    framed.push(Series { label: String::new(), points: vec![(right, 0.0)], color: String::new() });
    let f = Frame::fit(&framed, axes.log_x);
    let mut out = String::new();
    header(&mut out, axes, &f);
    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let mut d = format!("M{:.2} {:.2}", f.px(s.points[0].0), f.py(0.0));
        for (k, &(x, h)) in s.points.iter().enumerate() {
            let next = s.points.get(k + 1).map_or(right, |p| p.0);
            let _ = write!(d, " L{:.2} {:.2} L{:.2} {:.2}", f.px(x), f.py(h), f.px(next), f.py(h));
        }
        let _ = write!(d, " L{:.2} {:.2}", f.px(right), f.py(0.0));
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#, s.color);
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}
