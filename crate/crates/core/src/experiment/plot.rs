//! Static SVG and CSV renderings of per-node noise.

use std::fmt::Write;

use ndarray::Array2;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Per-node noise magnitude: the norm of the row actually added to the
/// hidden layer, so every arm is measured in the same units.
pub fn noise_magnitudes(noise: &Array2<f64>) -> Vec<f64> {
    noise.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

/// Sorted magnitudes paired with their empirical cumulative fraction.
pub fn cumulative_distribution(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect()
}

/// Linear blue → yellow → red ramp for `t` in [0, 1].
fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let stops = [(49.0, 54.0, 149.0), (254.0, 224.0, 144.0), (165.0, 0.0, 38.0)];
    let (a, b, s) = if t < 0.5 {
        (stops[0], stops[1], t * 2.0)
    } else {
        (stops[1], stops[2], t * 2.0 - 1.0)
    };
    let mix = |x: f64, y: f64| (x + (y - x) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn scale(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 0.0)
    }
}

/// Unit-disk map of 2-D ball coordinates, each node filled by its value.
/// Equal values give a single colour.
pub fn disk_svg(points: &[[f64; 2]], values: &[f64], title: &str) -> String {
    let (lo, hi) = scale(values);
    let r = (SIZE - 2.0 * MARGIN) / 2.0;
    let (cx, cy) = (SIZE / 2.0, SIZE / 2.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{SIZE}" viewBox="0 0 {w} {SIZE}">"#,
        w = SIZE + 80.0
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{cx}" y="24" text-anchor="middle" font-size="14">{title}</text>"#
    );
    let _ = writeln!(
        svg,
        r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="none" stroke="black"/>"#
    );
    for (p, v) in points.iter().zip(values) {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
        let _ = writeln!(
            svg,
            r#"<circle class="node" cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
            cx + p[0] * r,
            cy - p[1] * r,
            ramp(t)
        );
    }
    let (lx, ly, lh) = (SIZE + 20.0, MARGIN, SIZE - 2.0 * MARGIN);
    let _ = writeln!(svg, r#"<defs><linearGradient id="ramp" x1="0" y1="1" x2="0" y2="0">"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let _ = writeln!(svg, r#"<stop offset="{t}" stop-color="{}"/>"#, ramp(t));
    }
    let _ = writeln!(svg, "</linearGradient></defs>");
    let _ = writeln!(
        svg,
        r#"<rect x="{lx}" y="{ly}" width="16" height="{lh}" fill="url(#ramp)"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{lx}" y="{}" font-size="10">{hi:.3}</text>"#, ly - 6.0);
    let _ = writeln!(
        svg,
        r#"<text x="{lx}" y="{}" font-size="10">{lo:.3}</text>"#,
        ly + lh + 14.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Step plots of several cumulative distributions on shared axes.
pub fn cdf_svg(curves: &[(String, Vec<(f64, f64)>)], title: &str) -> String {
    let colours = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
    ];
    let x_max = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.0))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let w = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x / x_max * w;
    let py = |y: f64| SIZE - MARGIN - y * w;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
        SIZE / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {b} H{e} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = SIZE - MARGIN,
        e = SIZE - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="10">{x_max:.3}</text>"#,
        SIZE - MARGIN - 20.0,
        SIZE - MARGIN + 14.0
    );
    let _ = writeln!(svg, r#"<text x="4" y="{}" font-size="10">1.0</text>"#, MARGIN + 4.0);
    for (k, (label, curve)) in curves.iter().enumerate() {
        let colour = colours[k % colours.len()];
        let mut d = format!("M{:.2} {:.2}", px(0.0), py(0.0));
        for &(x, y) in curve {
            let _ = write!(d, " H{:.2} V{:.2}", px(x), py(y));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{d}" stroke="{colour}" fill="none" stroke-width="1.5"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{colour}">{label}</text>"#,
            MARGIN + 10.0,
            MARGIN + 14.0 * (k + 1) as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
