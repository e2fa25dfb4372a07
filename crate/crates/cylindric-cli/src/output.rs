//! CSV and SVG writers. Every file starts with the RunConfig header line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Float with 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str, columns: &[&str]) -> Self {
        Csv { text: format!("{header}\n{}\n", columns.join(",")) }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn save(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        save(dir, name, &self.text)
    }
}

pub fn save(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

fn open(header: &str, title: &str) -> String {
    let mut s = format!("<!-- {} -->\n", header.replace("--", "-"));
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, esc(title));
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline or marker series.
pub struct Series {
    pub label: String,
    pub colour: &'static str,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

/// Line plot with optional vertical reference lines `(x, label)`.
pub fn line_plot(header: &str, title: &str, xlabel: &str, ylabel: &str, series: &[Series], vlines: &[(f64, String)]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for (x, _) in vlines {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = open(header, title);
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * PAD, H - 2.0 * PAD);
    for (v, label) in [(x0, x0), (x1, x1)] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{label:.3}</text>"#, sx(v), H - PAD + 16.0);
    }
    for (v, label) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label:.3}</text>"#, PAD - 4.0, sy(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
    for (x, label) in vlines {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{PAD}" x2="{0:.2}" y2="{1}" stroke="grey" stroke-dasharray="4 3"/>"#, sx(*x), H - PAD);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#, sx(*x) + 4.0, PAD + 14.0, esc(label));
    }
    for (j, se) in series.iter().enumerate() {
        let pts: Vec<String> = se.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if se.markers {
            for p in &pts {
                let (cx, cy) = p.split_once(',').unwrap();
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2" fill="{}"/>"#, se.colour);
            }
        } else {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, pts.join(" "), se.colour);
        }
        let ly = PAD + 16.0 + 16.0 * j as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, W - PAD - 150.0, ly - 9.0, se.colour);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11">{}</text>"#, W - PAD - 136.0, esc(&se.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Heatmap of `values[row][col]`; row 0 is drawn at the bottom.
pub fn heatmap(header: &str, title: &str, xlabel: &str, ylabel: &str, values: &[Vec<f64>]) -> String {
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let rows = values.len().max(1);
    let cols = values.first().map_or(1, |r| r.len().max(1));
    let (cw, ch) = ((W - 2.0 * PAD) / cols as f64, (H - 2.0 * PAD) / rows as f64);
    let mut s = open(header, title);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let colour = if v.is_finite() {
                let a = ((v - lo) / span).clamp(0.0, 1.0);
                format!("rgb({},{},{})", (255.0 * a) as u8, (80.0 + 100.0 * (1.0 - (2.0 * a - 1.0).abs())) as u8, (255.0 * (1.0 - a)) as u8)
            } else {
                "black".to_string()
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
                PAD + j as f64 * cw,
                H - PAD - (i + 1) as f64 * ch,
                cw + 0.3,
                ch + 0.3
            );
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">range [{lo:.4}, {hi:.4}]</text>"#, W - PAD, PAD - 6.0);
    s.push_str("</svg>\n");
    s
}
