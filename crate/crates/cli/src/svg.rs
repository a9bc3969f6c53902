//! Minimal deterministic SVG line and scatter plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone)]
pub enum Layer {
    /// Polyline; non-finite points and points outside the y-range break it.
    Line {
        points: Vec<(f64, f64)>,
        color: &'static str,
    },
    Markers {
        points: Vec<(f64, f64)>,
        color: &'static str,
        radius: f64,
        class: &'static str,
    },
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub layers: Vec<Layer>,
}

/// 1-2-5 tick spacing giving about `target` ticks.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    fn sx(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        HEIGHT - BOTTOM - (y - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }

    fn inside(&self, (x, y): (f64, f64)) -> bool {
        x.is_finite()
            && y.is_finite()
            && x >= self.x_range.0
            && x <= self.x_range.1
            && y >= self.y_range.0
            && y <= self.y_range.1
    }

    /// Render with `metadata` placed in a leading comment.
    pub fn render(&self, metadata: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, "<!-- {} -->", metadata.replace("--", "- -"));
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for t in ticks(self.x_range.0, self.x_range.1, 8) {
            let x = self.sx(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                y1 + 5.0,
                y1 + 18.0,
                label(t)
            );
        }
        for t in ticks(self.y_range.0, self.y_range.1, 6) {
            let y = self.sy(t);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        for layer in &self.layers {
            match layer {
                Layer::Line { points, color } => {
                    let mut run: Vec<String> = Vec::new();
                    let flush = |run: &mut Vec<String>, out: &mut String| {
                        if run.len() > 1 {
                            let _ = writeln!(
                                out,
                                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                                run.join(" ")
                            );
                        }
                        run.clear();
                    };
                    for &p in points {
                        if self.inside(p) {
                            run.push(format!("{:.2},{:.2}", self.sx(p.0), self.sy(p.1)));
                        } else {
                            flush(&mut run, &mut out);
                        }
                    }
                    flush(&mut run, &mut out);
                }
                Layer::Markers {
                    points,
                    color,
                    radius,
                    class,
                } => {
                    for &p in points.iter().filter(|p| self.inside(**p)) {
                        let _ = writeln!(
                            out,
                            r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#,
                            self.sx(p.0),
                            self.sy(p.1)
                        );
                    }
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Bounding range with a relative margin; degenerate spans are widened.
pub fn padded_range(values: impl Iterator<Item = f64>, margin: f64) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = (hi - lo).max(1e-9 * lo.abs().max(1.0));
    (lo - margin * span, hi + margin * span)
}
