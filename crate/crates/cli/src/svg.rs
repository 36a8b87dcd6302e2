//! Minimal static SVG line charts. Coordinates are printed with fixed
//! precision so identical inputs give identical files.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone)]
pub enum Mark {
    Line,
    /// Right-continuous step function.
    Step,
    /// Histogram bars of the given width, `x` at the left edge.
    Bars(f64),
    /// Shaded region between `ys` and these upper values.
    Band(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub mark: Mark,
}

impl Series {
    pub fn new(label: &str, xs: Vec<f64>, ys: Vec<f64>, mark: Mark) -> Self {
        Self {
            label: label.to_string(),
            xs,
            ys,
            mark,
        }
    }
}

pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
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

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e6).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for s in &self.series {
            for (i, (&x, &y)) in s.xs.iter().zip(&s.ys).enumerate() {
                let mut xs = vec![x];
                let mut ys = vec![y];
                match &s.mark {
                    Mark::Bars(w) => {
                        xs.push(x + w);
                        ys.push(0.0);
                    }
                    Mark::Band(up) => ys.push(up[i]),
                    _ => {}
                }
                for v in xs.into_iter().filter(|v| v.is_finite()) {
                    x0 = x0.min(v);
                    x1 = x1.max(v);
                }
                for v in ys.into_iter().filter(|v| v.is_finite()) {
                    y0 = y0.min(v);
                    y1 = y1.max(v);
                }
            }
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        (x0, x1, y0.min(0.0), y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let (xs, ys) = (nice_step(x1 - x0), nice_step(y1 - y0));
        let (x0, x1) = ((x0 / xs).floor() * xs, (x1 / xs).ceil() * xs);
        let (y0, y1) = ((y0 / ys).floor() * ys, (y1 / ys).ceil() * ys);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        // grid and ticks
        let mut t = x0;
        while t <= x1 + 1e-9 * xs {
            let x = px(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                label(t)
            );
            t += xs;
        }
        let mut t = y0;
        while t <= y1 + 1e-9 * ys {
            let y = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                label(t)
            );
            t += ys;
        }
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.ylabel)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .xs
                .iter()
                .zip(&series.ys)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| (x, y))
                .collect();
            match &series.mark {
                Mark::Line => {
                    let d: Vec<String> = pts
                        .iter()
                        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                        d.join(" ")
                    );
                }
                Mark::Step => {
                    let mut d = Vec::new();
                    for (i, &(x, y)) in pts.iter().enumerate() {
                        if i > 0 {
                            d.push(format!("{:.2},{:.2}", px(x), py(pts[i - 1].1)));
                        }
                        d.push(format!("{:.2},{:.2}", px(x), py(y)));
                    }
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        d.join(" ")
                    );
                }
                Mark::Bars(w) => {
                    for &(x, y) in &pts {
                        let _ = writeln!(
                            s,
                            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="#555" stroke-width="0.5"/>"##,
                            px(x),
                            py(y),
                            px(x + w) - px(x),
                            py(0.0) - py(y)
                        );
                    }
                }
                Mark::Band(upper) => {
                    let mut d: Vec<String> = Vec::new();
                    for (i, (&x, &y)) in series.xs.iter().zip(&series.ys).enumerate() {
                        if x.is_finite() && y.is_finite() && upper[i].is_finite() {
                            d.push(format!("{:.2},{:.2}", px(x), py(y)));
                        }
                    }
                    for (i, &x) in series.xs.iter().enumerate().rev() {
                        if x.is_finite() && series.ys[i].is_finite() && upper[i].is_finite() {
                            d.push(format!("{:.2},{:.2}", px(x), py(upper[i])));
                        }
                    }
                    let _ = writeln!(
                        s,
                        r#"<polygon fill="{color}" fill-opacity="0.2" stroke="none" points="{}"/>"#,
                        d.join(" ")
                    );
                }
            }
            let ly = TOP + 16.0 + 18.0 * k as f64;
            let lx = LEFT + pw - 190.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="8" fill="{color}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 8.0,
                lx + 20.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
