use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::tune::SweepPoint;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "alpha,family,b,val_raw,val_balanced,test_raw,test_balanced,spec_digest";

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn curve_csv(points: &[SweepPoint]) -> String {
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for p in points {
        writeln!(
            s,
            "{:.6},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            p.alpha, p.family, p.b, p.val_raw, p.val_balanced, p.test_raw, p.test_balanced, p.spec_digest
        )
        .unwrap();
    }
    s
}

/// Families in order of first appearance with their points sorted by α.
fn by_family(points: &[SweepPoint]) -> Vec<(&str, Vec<&SweepPoint>)> {
    let mut groups: Vec<(&str, Vec<&SweepPoint>)> = Vec::new();
    for p in points {
        match groups.iter_mut().find(|(f, _)| *f == p.family) {
            Some((_, g)) => g.push(p),
            None => groups.push((&p.family, vec![p])),
        }
    }
    for (_, g) in &mut groups {
        g.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    }
    groups
}

fn axis_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let lo = ((lo - 0.025) / 0.05).floor() * 0.05;
    let hi = ((hi + 0.025) / 0.05).ceil() * 0.05;
    (lo.max(0.0), hi.min(1.0).max(lo.max(0.0) + 0.05))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Test raw accuracy on x, test balanced accuracy on y, one polyline per
/// family with α labelled at both ends.
pub fn curve_svg(points: &[SweepPoint]) -> String {
    let (x0, x1) = axis_bounds(points.iter().map(|p| p.test_raw));
    let (y0, y1) = axis_bounds(points.iter().map(|p| p.test_balanced));
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#).unwrap();
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(s, r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#).unwrap();
    let ticks = |lo: f64, hi: f64| {
        let n = ((hi - lo) / 0.05).round() as usize;
        (0..=n).map(move |i| lo + i as f64 * (hi - lo) / n as f64)
    };
    for v in ticks(x0, x1) {
        let x = px(v);
        writeln!(s, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.2}</text>"#, b + 20.0).unwrap();
    }
    for v in ticks(y0, y1) {
        let y = py(v);
        writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#, l - 5.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, l - 8.0, y + 4.0).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">test raw accuracy</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">test balanced accuracy</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();

    for (i, (family, pts)) in by_family(points).iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.test_raw), py(p.test_balanced)))
            .collect();
        writeln!(
            s,
            r#"<polyline class="family" data-family="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(family),
            coords.join(" ")
        )
        .unwrap();
        for p in pts {
            writeln!(
                s,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                px(p.test_raw),
                py(p.test_balanced)
            )
            .unwrap();
        }
        let ends: Vec<&&SweepPoint> = if pts.len() == 1 {
            vec![&pts[0]]
        } else {
            vec![&pts[0], &pts[pts.len() - 1]]
        };
        for p in ends {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">α={:.2}</text>"#,
                px(p.test_raw) + 6.0,
                py(p.test_balanced) - 6.0,
                p.alpha
            )
            .unwrap();
        }
        let ly = MARGIN + 16.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            WIDTH - MARGIN - 120.0,
            WIDTH - MARGIN - 100.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - MARGIN - 95.0,
            ly + 4.0,
            escape(family)
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

/// Write `curve.csv` and `curve.svg` into `out_dir`.
pub fn emit_curve(points: &[SweepPoint], out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no sweep points to plot".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv = out_dir.join("curve.csv");
    let svg = out_dir.join("curve.svg");
    std::fs::write(&csv, curve_csv(points)).map_err(|e| Error::io(&csv, e))?;
    std::fs::write(&svg, curve_svg(points)).map_err(|e| Error::io(&svg, e))?;
    Ok((csv, svg))
}
