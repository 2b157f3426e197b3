//! Minimal standalone SVG charts: multi-panel line plots and a ranked
//! dot-and-interval chart. Output is a pure function of the inputs.

use std::fmt::Write;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal black reference line.
    pub reference: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IntervalMark {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub color: &'static str,
}

#[derive(Clone, Debug)]
pub struct IntervalRow {
    pub label: String,
    pub marks: Vec<IntervalMark>,
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Roughly five round tick values spanning `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        0.5 * lo.abs().max(1.0)
    };
    (lo - pad, hi + pad)
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str, x_ticks: bool) {
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            self.x0, self.y0, self.w, self.h
        );
        if x_ticks {
            for t in ticks(self.xr.0, self.xr.1) {
                let x = self.x(t);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                    self.y0 + self.h,
                    self.y0 + self.h + 5.0,
                    self.y0 + self.h + 18.0,
                    fmt_tick(t)
                );
            }
        }
        for t in ticks(self.yr.0, self.yr.1) {
            let y = self.y(t);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                self.x0 - 5.0,
                self.x0,
                self.x0 - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 40.0,
            escape(x_label)
        );
        let (cx, cy) = (self.x0 - 52.0, self.y0 + self.h / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{cy:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {cx:.2} {cy:.2})">{}</text>"#,
            escape(y_label)
        );
    }
}

/// Side-by-side line panels sharing one title.
pub fn line_panels(title: &str, panels: &[Panel]) -> String {
    let cell_w = MARGIN_L + PANEL_W + MARGIN_R;
    let legend_rows = panels.iter().map(|p| p.series.len()).max().unwrap_or(0);
    let total_w = cell_w * panels.len().max(1) as f64;
    let total_h = MARGIN_T + PANEL_H + MARGIN_B + 16.0 * legend_rows as f64 + 10.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        total_w / 2.0,
        escape(title)
    );
    for (k, panel) in panels.iter().enumerate() {
        let x_vals = panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0));
        let y_vals = panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(panel.reference);
        let frame = Frame {
            x0: k as f64 * cell_w + MARGIN_L,
            y0: MARGIN_T,
            w: PANEL_W,
            h: PANEL_H,
            xr: padded_range(x_vals),
            yr: padded_range(y_vals),
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            frame.x0 + frame.w / 2.0,
            MARGIN_T - 8.0,
            escape(&panel.title)
        );
        frame.axes(&mut out, &panel.x_label, &panel.y_label, true);
        if let Some(r) = panel.reference {
            let y = frame.y(r);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000" stroke-width="1.5"/>"##,
                frame.x0,
                frame.x0 + frame.w
            );
        }
        for s in &panel.series {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
                .collect();
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
                pts.join(" "),
                s.color
            );
            for p in &pts {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x}" cy="{y}" r="3" fill="{}"/>"#,
                    s.color
                );
            }
        }
        for (i, s) in panel.series.iter().enumerate() {
            let y = MARGIN_T + PANEL_H + MARGIN_B + 16.0 * i as f64;
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                frame.x0,
                y - 4.0,
                frame.x0 + 24.0,
                y - 4.0,
                s.color,
                frame.x0 + 30.0,
                y,
                escape(&s.label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One row per label, top to bottom in the given order, each with one or
/// more point estimates and intervals drawn in the mark colors.
pub fn interval_chart(
    title: &str,
    x_label: &str,
    rows: &[IntervalRow],
    legend: &[(&str, &str)],
) -> String {
    let row_h = 26.0;
    let label_w = 220.0;
    let plot_w = 520.0;
    let plot_h = row_h * rows.len().max(1) as f64;
    let total_w = label_w + plot_w + 40.0;
    let total_h = MARGIN_T + plot_h + MARGIN_B + 18.0 * legend.len() as f64;
    let values = rows
        .iter()
        .flat_map(|r| r.marks.iter().flat_map(|m| [m.lo, m.hi, m.estimate]))
        .chain(std::iter::once(0.0));
    let frame = Frame {
        x0: label_w,
        y0: MARGIN_T,
        w: plot_w,
        h: plot_h,
        xr: padded_range(values),
        yr: (0.0, rows.len().max(1) as f64),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        total_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        frame.x0, frame.y0, frame.w, frame.h
    );
    for t in ticks(frame.xr.0, frame.xr.1) {
        let x = frame.x(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
            frame.y0,
            frame.y0 + frame.h,
            frame.y0 + frame.h + 16.0,
            fmt_tick(t)
        );
    }
    let zero = frame.x(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{zero:.2}" y1="{:.2}" x2="{zero:.2}" y2="{:.2}" stroke="#000"/>"##,
        frame.y0,
        frame.y0 + frame.h
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        frame.x0 + frame.w / 2.0,
        frame.y0 + frame.h + 38.0,
        escape(x_label)
    );
    for (i, row) in rows.iter().enumerate() {
        let yc = frame.y0 + row_h * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            label_w - 10.0,
            yc + 4.0,
            escape(&row.label)
        );
        let k = row.marks.len().max(1) as f64;
        for (j, m) in row.marks.iter().enumerate() {
            let y = yc + (j as f64 - (k - 1.0) / 2.0) * 6.0;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><circle cx="{:.2}" cy="{y:.2}" r="3.5" fill="{}"/>"#,
                frame.x(m.lo),
                frame.x(m.hi),
                m.color,
                frame.x(m.estimate),
                m.color
            );
        }
    }
    for (i, (name, color)) in legend.iter().enumerate() {
        let y = frame.y0 + frame.h + MARGIN_B + 18.0 * i as f64 - 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#,
            frame.x0,
            y - 4.0,
            frame.x0 + 24.0,
            y - 4.0,
            frame.x0 + 30.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
