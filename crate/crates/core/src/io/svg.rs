//! Minimal static SVG plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// Dashed reference curve.
    pub dashed: bool,
}

fn bounds<'a>(pts: impl Iterator<Item = (&'a f64, &'a f64)>) -> (f64, f64, f64, f64) {
    let mut b = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        b = (b.0.min(*x), b.1.max(*x), b.2.min(*y), b.3.max(*y));
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let widen = |lo: f64, hi: f64| {
        if hi - lo > 1e-12 * hi.abs().max(1.0) {
            (lo, hi)
        } else {
            let d = 0.5 * lo.abs().max(1.0);
            (lo - d, hi + d)
        }
    };
    let (x0, x1) = widen(b.0, b.1);
    let (y0, y1) = widen(b.2, b.3);
    let m = 0.05 * (y1 - y0);
    (x0, x1, y0 - m, y1 + m)
}

fn frame(out: &mut String, title: &str, xl: &str, yl: &str, b: (f64, f64, f64, f64)) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>
"#,
        W / 2.0,
        escape(title),
        W - 2.0 * PAD,
        H - 2.0 * PAD,
        W / 2.0,
        H - 14.0,
        escape(xl),
        H / 2.0,
        H / 2.0,
        escape(yl)
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let x = PAD + f * (W - 2.0 * PAD);
        let y = H - PAD - f * (H - 2.0 * PAD);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            H - PAD + 16.0,
            tick(b.0 + f * (b.1 - b.0)),
            PAD - 4.0,
            y + 4.0,
            tick(b.2 + f * (b.3 - b.2))
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn map(b: (f64, f64, f64, f64), x: f64, y: f64) -> (f64, f64) {
    (
        PAD + (x - b.0) / (b.1 - b.0) * (W - 2.0 * PAD),
        H - PAD - (y - b.2) / (b.3 - b.2) * (H - 2.0 * PAD),
    )
}

fn path(
    out: &mut String,
    b: (f64, f64, f64, f64),
    x: &[f64],
    y: &[f64],
    color: &str,
    dashed: bool,
    closed: bool,
) {
    let mut d = String::new();
    for (k, (px, py)) in x
        .iter()
        .zip(y)
        .filter(|(a, c)| a.is_finite() && c.is_finite())
        .enumerate()
    {
        let (sx, sy) = map(b, *px, *py);
        let _ = write!(d, "{}{sx:.2},{sy:.2} ", if k == 0 { "M" } else { "L" });
    }
    if closed {
        d.push('Z');
    }
    let dash = if dashed {
        r#" stroke-dasharray="6,4""#
    } else {
        ""
    };
    let _ = writeln!(
        out,
        r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#
    );
}

fn legend(out: &mut String, labels: &[(&str, &str)]) {
    for (k, (label, color)) in labels.iter().enumerate() {
        let y = PAD + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - PAD - 120.0,
            W - PAD - 100.0,
            W - PAD - 94.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Line plot of one or more series.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>]) -> String {
    let b = bounds(series.iter().flat_map(|s| s.x.iter().zip(s.y)));
    let mut out = String::new();
    frame(&mut out, title, xlabel, ylabel, b);
    let mut labels = Vec::new();
    for (k, s) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        path(&mut out, b, s.x, s.y, c, s.dashed, false);
        labels.push((s.label, c));
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// A polyline as separate r and s columns.
pub type Curve = (Vec<f64>, Vec<f64>);

/// Closed curves, one colour per group.
pub fn overlay_plot(title: &str, groups: &[(String, Vec<Curve>)]) -> String {
    let b = bounds(
        groups
            .iter()
            .flat_map(|(_, cs)| cs.iter().flat_map(|(r, s)| r.iter().zip(s))),
    );
    let mut out = String::new();
    frame(&mut out, title, "r", "s", b);
    let mut labels = Vec::new();
    for (k, (label, curves)) in groups.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        for (r, s) in curves {
            path(&mut out, b, r, s, c, false, true);
        }
        labels.push((label.as_str(), c));
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}
