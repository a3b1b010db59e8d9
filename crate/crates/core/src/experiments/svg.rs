//! Minimal static SVG charts. Output depends only on the data, so files
//! regenerate byte-identically.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
}

/// Line chart with a fixed y range of `[0, 1]`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, lines: &[Line]) -> String {
    let xs = lines.iter().flat_map(|l| l.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - y) * ph;

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{x2}" y2="{py:.2}" stroke="#ddd"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{y:.1}</text>"##,
            py = sy(y),
            x2 = LEFT + pw,
            tx = LEFT - 6.0,
            ty = sy(y) + 4.0,
        );
    }
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{ty}" text-anchor="middle">{x:.1}</text>"#,
            px = sx(x),
            ty = TOP + ph + 16.0,
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{y:.2}" text-anchor="middle" transform="rotate(-90 16 {y:.2})">{}</text>"#,
        esc(y_label),
        y = TOP + ph / 2.0
    );
    for (k, line) in lines.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = line.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if line.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.8"{dash}/>"#,
            pts.join(" ")
        );
        for &(x, y) in &line.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = W - RIGHT + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="1.8"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            esc(&line.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Binned scatter of Gram index pairs `(i, j)` on a `size x size` index
/// square: every occupied cell is painted, mirrored across the diagonal.
pub fn pair_density(title: &str, size: usize, pairs: &[(usize, usize)]) -> String {
    const BINS: usize = 256;
    let side = H - TOP - BOTTOM;
    let cell = side / BINS as f64;
    let bin = |v: usize| (v * BINS / size.max(1)).min(BINS - 1);
    let mut hit = vec![false; BINS * BINS];
    for &(i, j) in pairs {
        let (a, b) = (bin(i), bin(j));
        hit[a * BINS + b] = true;
        hit[b * BINS + a] = true;
    }
    let mut out = String::new();
    header(&mut out, title);
    let x0 = (W - side) / 2.0;
    let _ = writeln!(out, r#"<rect x="{x0}" y="{TOP}" width="{side}" height="{side}" fill="none" stroke="black"/>"#);
    for a in 0..BINS {
        for b in 0..BINS {
            if hit[a * BINS + b] {
                let _ = writeln!(
                    out,
                    r##"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="#d62728"/>"##,
                    x0 + b as f64 * cell,
                    TOP + a as f64 * cell
                );
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">column index (0..{size}), {} entries</text>"#,
        W / 2.0,
        H - 12.0,
        pairs.len()
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_wellformed_and_stable() {
        let lines = vec![Line { label: "a<b".into(), points: vec![(0.0, 0.1), (3.0, 0.9)], dashed: true }];
        let a = line_chart("t", "x", "y", &lines);
        assert_eq!(a, line_chart("t", "x", "y", &lines));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a&lt;b"));
        assert!(a.contains("stroke-dasharray"));
    }

    #[test]
    fn density_mirrors_pairs() {
        let s = pair_density("g", 512, &[(0, 511)]);
        assert_eq!(s.matches("#d62728").count(), 2);
    }
}
