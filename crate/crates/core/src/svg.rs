//! Minimal SVG output: heatmaps of 2D fields and line plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const VIRIDIS: [(f64, f64, f64); 5] =
    [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];

fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Row-major `values` (`j * nx + i`, `y` upward), block-averaged down to at most `max_cells` per side.
pub fn heatmap(values: &[f64], nx: usize, ny: usize, title: &str, max_cells: usize) -> String {
    let bx = nx.div_ceil(max_cells).max(1);
    let by = ny.div_ceil(max_cells).max(1);
    let (cx, cy) = (nx / bx, ny / by);
    let mut cells = vec![0.0; cx * cy];
    for j in 0..cy {
        for i in 0..cx {
            let mut s = 0.0;
            for q in 0..by {
                for p in 0..bx {
                    s += values[(j * by + q) * nx + i * bx + p];
                }
            }
            cells[j * cx + i] = s / (bx * by) as f64;
        }
    }
    let lo = cells.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = (480.0 / cx.max(cy) as f64).max(1.0);
    let (w, h) = (cx as f64 * px, cy as f64 * px);
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        w + 20.0,
        h + 50.0,
        w + 20.0,
        h + 50.0
    );
    let _ = write!(s, r#"<text x="10" y="18" font-family="sans-serif" font-size="13">{}</text>"#, escape(title));
    let _ = write!(s, r#"<g transform="translate(10,28)" shape-rendering="crispEdges">"#);
    for j in 0..cy {
        for i in 0..cx {
            let c = color((cells[j * cx + i] - lo) / span);
            let y = (cy - 1 - j) as f64 * px;
            let _ = write!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                i as f64 * px,
                y,
                px + 0.05,
                px + 0.05
            );
        }
    }
    let _ = write!(
        s,
        r#"</g><text x="10" y="{:.0}" font-family="sans-serif" font-size="11">min {lo:.4}  max {hi:.4}</text></svg>"#,
        h + 44.0
    );
    s
}

/// One named polyline.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot; with `log_y` non-positive values are dropped.
pub fn line_plot(series: &[Series], title: &str, x_label: &str, log_y: bool) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let tr = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0))
                .map(|&(x, y)| (x, tr(y)))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = write!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = write!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{m}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = write!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let ylab = |y: f64| if log_y { format!("1e{y:.1}") } else { format!("{y:.4}") };
    let _ = write!(
        s,
        r#"<g font-family="sans-serif" font-size="11"><text x="{m}" y="{}">{x0:.3}</text><text x="{}" y="{}" text-anchor="end">{x1:.3}</text><text x="{}" y="{}" text-anchor="middle">{}</text><text x="4" y="{}">{}</text><text x="4" y="{}">{}</text></g>"#,
        h - m + 16.0,
        w - m,
        h - m + 16.0,
        w / 2.0,
        h - m + 32.0,
        escape(x_label),
        h - m,
        ylab(y0),
        m + 10.0,
        ylab(y1)
    );
    for (k, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        if !p.is_empty() {
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = write!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        let ly = m + 16.0 + 16.0 * k as f64;
        let _ = write!(
            s,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{c}" text-anchor="end">{}</text>"#,
            w - m - 6.0,
            escape(ser.name)
        );
    }
    s.push_str("</svg>");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg)?;
    Ok(())
}
