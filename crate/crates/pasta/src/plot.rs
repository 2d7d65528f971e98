//! Static SVG line charts of mean ± one standard error per method.

use std::fmt::Write as _;
use std::path::Path;

use crate::harness::{summarize, Method, Metric, ResultRow, SummaryPoint};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const CAP: f64 = 4.0;

fn color(m: Method) -> &'static str {
    match m {
        Method::Pasta => "#d62728",
        Method::Baseline => "#1f77b4",
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    /// Maps `[lo, hi]` onto `[from, to]`; a degenerate range is widened so a
    /// constant series still lands mid-axis.
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
            (lo - pad, hi + pad)
        };
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self) -> impl Iterator<Item = f64> + '_ {
        (0..TICKS).map(move |k| self.lo + (self.hi - self.lo) * k as f64 / (TICKS - 1) as f64)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders the summary of `rows` for `metric`. Failed replications are
/// excluded from the statistics.
pub fn render_svg(rows: &[ResultRow], metric: Metric) -> Result<String, String> {
    let points: Vec<SummaryPoint> = summarize(rows, metric).into_iter().filter(|p| p.count > 0).collect();
    if points.is_empty() {
        return Err("no successful rows to plot".into());
    }
    let sweep_var = rows[0].sweep_var;
    let x_lo = points.iter().map(|p| p.sweep_value).fold(f64::INFINITY, f64::min);
    let x_hi = points.iter().map(|p| p.sweep_value).fold(f64::NEG_INFINITY, f64::max);
    let y_lo = points.iter().map(|p| p.mean - p.std_error).fold(f64::INFINITY, f64::min);
    let y_hi = points.iter().map(|p| p.mean + p.std_error).fold(f64::NEG_INFINITY, f64::max);
    let xs = Scale::new(x_lo, x_hi, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(y_lo, y_hi, HEIGHT - BOTTOM, TOP);

    let mut svg = String::new();
    let w = &mut svg;
    // Writing into a String cannot fail.
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(w, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(w, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(w, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g class="x-ticks" text-anchor="middle">"#);
    for t in xs.ticks() {
        let x = xs.map(t);
        let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}">{}</text>"#, y0 + 19.0, tick_label(t));
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, r#"<g class="y-ticks" text-anchor="end">"#);
    for t in ys.ticks() {
        let y = ys.map(t);
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x0 - 8.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(
        w,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">{sweep_var}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text class="y-label" x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        metric.label()
    );

    for method in Method::ALL {
        let series: Vec<&SummaryPoint> = points.iter().filter(|p| p.method == method).collect();
        if series.is_empty() {
            continue;
        }
        let c = color(method);
        let _ = writeln!(w, r#"<g class="series" data-method="{method}">"#);
        let coords: Vec<String> = series
            .iter()
            .map(|p| format!("{:.2},{:.2}", xs.map(p.sweep_value), ys.map(p.mean)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for p in &series {
            let x = xs.map(p.sweep_value);
            let (lo, hi) = (ys.map(p.mean - p.std_error), ys.map(p.mean + p.std_error));
            let _ = writeln!(w, r#"<g class="error-bar" stroke="{c}">"#);
            let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}"/>"#);
            let _ = writeln!(w, r#"<line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}"/>"#, x - CAP, x + CAP);
            let _ = writeln!(w, r#"<line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}"/>"#, x - CAP, x + CAP);
            let _ = writeln!(w, "</g>");
            let _ = writeln!(w, r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, ys.map(p.mean));
        }
        let _ = writeln!(w, "</g>");
    }

    let _ = writeln!(w, r#"<g class="legend">"#);
    for (k, method) in Method::ALL.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * k as f64;
        let x = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
            x + 24.0,
            color(*method)
        );
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{method}</text>"#, x + 30.0, y + 4.0);
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_plot(rows: &[ResultRow], metric: Metric, path: &Path) -> std::io::Result<()> {
    let svg = render_svg(rows, metric).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    std::fs::write(path, svg)
}
