//! Minimal deterministic SVG line charts: axes, polylines, error bars.

use std::fmt::Write;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 50.0;
const TITLE_H: f64 = 30.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Half-height of the error bar.
    pub err: Option<f64>,
}

impl Point {
    pub fn new(x: f64, y: f64, err: Option<f64>) -> Self {
        Self { x, y, err }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
    pub dashed: bool,
    pub markers: bool,
    /// Palette slot, so fitted lines can share their data colour.
    pub color: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    pub notes: Vec<String>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s == "-0" || s.starts_with("-0.") && s.trim_start_matches("-0.").chars().all(|c| c == '0') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn finite(p: &Point) -> bool {
    p.x.is_finite() && p.y.is_finite()
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let pts = || panel.series.iter().flat_map(|s| s.points.iter()).filter(|p| finite(p));
    let (x0, x1) = extent(pts().map(|p| p.x).chain(panel.markers.iter().map(|m| m.x)));
    let (y0, y1) = extent(
        pts()
            .flat_map(|p| {
                let e = p.err.filter(|e| e.is_finite()).unwrap_or(0.0);
                [p.y - e, p.y + e]
            })
            .chain(panel.markers.iter().map(|m| m.y)),
    );
    let left = MARGIN_L;
    let right = PANEL_W - MARGIN_R;
    let ptop = top + MARGIN_T;
    let bottom = top + PANEL_H - MARGIN_B;
    let sx = Scale { lo: x0, hi: x1, a: left, b: right };
    let sy = Scale { lo: y0, hi: y1, a: bottom, b: ptop };

    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"##,
        (left + right) / 2.0,
        top + 20.0,
        esc(&panel.title)
    );
    for (i, note) in panel.notes.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="11" fill="#444">{}</text>"##,
            left + 6.0,
            ptop + 14.0 + 14.0 * i as f64,
            esc(note)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{ptop:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
        right - left,
        bottom - ptop
    );
    for (scale, horizontal) in [(&sx, true), (&sy, false)] {
        let step = nice_step(scale.hi - scale.lo);
        let mut t = (scale.lo / step).ceil() * step;
        while t <= scale.hi + 1e-12 * step {
            let p = scale.map(t);
            let label = tick_label(t, step);
            if horizontal {
                let _ = writeln!(
                    out,
                    r##"<line x1="{p:.2}" y1="{bottom:.2}" x2="{p:.2}" y2="{:.2}" stroke="#000"/><text x="{p:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"##,
                    bottom + 5.0,
                    bottom + 18.0
                );
            } else {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{p:.2}" x2="{left:.2}" y2="{p:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"##,
                    left - 5.0,
                    left - 8.0,
                    p + 4.0
                );
            }
            t += step;
        }
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"##,
        (left + right) / 2.0,
        bottom + 38.0,
        esc(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r##"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"##,
        (ptop + bottom) / 2.0,
        (ptop + bottom) / 2.0,
        esc(&panel.y_label)
    );

    for s in &panel.series {
        let color = PALETTE[s.color % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| finite(p))
            .map(|p| format!("{:.2},{:.2}", sx.map(p.x), sy.map(p.y)))
            .collect();
        if coords.len() >= 2 {
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"##,
                coords.join(" ")
            );
        }
        for p in s.points.iter().filter(|p| finite(p)) {
            let (cx, cy) = (sx.map(p.x), sy.map(p.y));
            if let Some(e) = p.err.filter(|e| e.is_finite() && *e > 0.0) {
                let (ya, yb) = (sy.map(p.y - e), sy.map(p.y + e));
                let _ = writeln!(
                    out,
                    r##"<path d="M{cx:.2},{ya:.2}V{yb:.2}M{:.2},{ya:.2}H{:.2}M{:.2},{yb:.2}H{:.2}" stroke="{color}" fill="none"/>"##,
                    cx - 4.0,
                    cx + 4.0,
                    cx - 4.0,
                    cx + 4.0
                );
            }
            if s.markers {
                let _ = writeln!(out, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{color}"/>"##);
            }
        }
    }
    for m in &panel.markers {
        let (cx, cy) = (sx.map(m.x), sy.map(m.y));
        let _ = writeln!(
            out,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="none" stroke="#000" stroke-width="1.5"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
            cx + 8.0,
            cy - 8.0,
            esc(&m.label)
        );
    }
    // Legend in the top-right corner.
    for (i, s) in panel.series.iter().enumerate() {
        let y = ptop + 14.0 + 14.0 * i as f64;
        let color = PALETTE[s.color % PALETTE.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
            right - 30.0,
            y - 4.0,
            right - 8.0,
            y - 4.0,
            right - 34.0,
            y,
            esc(&s.label)
        );
    }
}

/// Stacks `panels` vertically under a shared title.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let height = TITLE_H + PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="20" font-size="16" font-weight="bold" text-anchor="middle">{}</text>"##,
        PANEL_W / 2.0,
        esc(title)
    );
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, TITLE_H + PANEL_H * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel() -> Panel {
        Panel {
            title: "gap <n>".into(),
            x_label: "n".into(),
            y_label: "gap".into(),
            series: vec![Series {
                label: "open/sps".into(),
                points: vec![Point::new(2.0, 0.1, Some(0.05)), Point::new(3.0, f64::NAN, None), Point::new(4.0, 0.2, None)],
                dashed: false,
                markers: true,
                color: 0,
            }],
            markers: vec![Marker { x: 3.0, y: 0.15, label: "min".into() }],
            notes: vec!["R² = 0.5".into()],
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = render("t", &[panel(), panel()]);
        assert_eq!(a, render("t", &[panel(), panel()]));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("&lt;n&gt;"));
        assert!(!a.contains("NaN"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert_eq!(a.matches("<path").count(), 2);
    }

    #[test]
    fn degenerate_ranges_render() {
        let mut p = panel();
        p.series[0].points = vec![Point::new(1.0, 0.0, None)];
        p.markers.clear();
        let s = render("flat", &[p]);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }

    #[test]
    fn tick_labels() {
        assert_eq!(nice_step(1.0), 0.2);
        assert_eq!(tick_label(0.4, 0.2), "0.4");
        assert_eq!(tick_label(-0.0, 0.2), "0.0");
        assert_eq!(tick_label(20.0, 5.0), "20");
    }
}
