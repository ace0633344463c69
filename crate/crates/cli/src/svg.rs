//! Log-log line plots written as plain SVG.

use std::fmt::Write;

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub curves: Vec<Curve>,
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Decade range covering every positive finite value, at least one decade wide.
fn decades(values: impl Iterator<Item = f64>) -> Option<(i32, i32)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return None;
    }
    let (lo, mut hi) = (lo.floor() as i32, hi.ceil() as i32);
    if hi <= lo {
        hi = lo + 1;
    }
    Some((lo, hi))
}

fn draw_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        oy + 18.0,
        escape(&panel.title)
    );
    let _ = writeln!(out, r##"<rect x="{x0:.1}" y="{y0:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333"/>"##);
    let pts = || panel.curves.iter().flat_map(|c| c.points.iter());
    let (Some((xa, xb)), Some((ya, yb))) = (decades(pts().map(|p| p.0)), decades(pts().map(|p| p.1))) else {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">no positive data</text>"#,
            x0 + pw / 2.0,
            y0 + ph / 2.0
        );
        return;
    };
    let sx = |x: f64| x0 + (x.log10() - xa as f64) / (xb - xa) as f64 * pw;
    let sy = |y: f64| y0 + ph - (y.log10() - ya as f64) / (yb - ya) as f64 * ph;
    let step = |a: i32, b: i32| ((b - a) as usize).div_ceil(8).max(1);
    for e in (xa..=xb).step_by(step(xa, xb)) {
        let x = sx(10f64.powi(e));
        let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##, y0 + ph);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">1e{e}</text>"#,
            y0 + ph + 14.0
        );
    }
    for e in (ya..=yb).step_by(step(ya, yb)) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(out, r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, x0 + pw);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">1e{e}</text>"#,
            x0 - 4.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        y0 + ph + 32.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 14.0,
        y0 + ph / 2.0,
        ox + 14.0,
        y0 + ph / 2.0,
        escape(&panel.y_label)
    );
    for (i, c) in panel.curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut path = String::new();
        for &(x, y) in c.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()) {
            let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.trim_end()
        );
        let ly = y0 + 14.0 + 14.0 * i as f64;
        let lx = x0 + pw - 130.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}" font-size="11">{}</text>"#, lx + 22.0, escape(&c.label));
    }
}

/// Panels laid out row by row, `cols` per row.
pub fn render(panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * rows as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, PANEL_W * (i % cols) as f64, PANEL_H * (i / cols) as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_range_ignores_nonpositive_values() {
        assert_eq!(decades([0.0, -1.0, 0.05, 20.0].into_iter()), Some((-2, 2)));
        assert_eq!(decades([1.0].into_iter()), Some((0, 1)));
        assert_eq!(decades([0.0, f64::NAN].into_iter()), None);
    }

    #[test]
    fn renders_one_polyline_per_curve() {
        let panel = Panel {
            title: "a < b".into(),
            x_label: "k".into(),
            y_label: "gap".into(),
            curves: vec![
                Curve { label: "one".into(), points: (1..10).map(|k| (k as f64, 1.0 / k as f64)).collect() },
                Curve { label: "two".into(), points: vec![(1.0, 0.0)] },
            ],
        };
        let svg = render(&[panel], 2);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
