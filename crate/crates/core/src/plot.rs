//! Minimal standalone SVG charts: line, grouped bar and box plots.

use std::fmt::Write as _;

/// Most points kept per series.
pub const MAX_POINTS: usize = 10_000;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            x,
            y,
        }
    }

    /// Series against the sample index scaled by `dt`.
    pub fn sampled(name: impl Into<String>, y: &[f64], dt: f64) -> Self {
        let x = (0..y.len()).map(|i| i as f64 * dt).collect();
        Self::new(name, x, y.to_vec())
    }
}

/// Keeps the min and max of each bucket so spikes survive decimation.
pub fn downsample(x: &[f64], y: &[f64], max_points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len().min(y.len());
    if n <= max_points {
        return (x[..n].to_vec(), y[..n].to_vec());
    }
    let buckets = (max_points / 2).max(1);
    let size = n.div_ceil(buckets);
    let (mut xs, mut ys) = (
        Vec::with_capacity(max_points),
        Vec::with_capacity(max_points),
    );
    for start in (0..n).step_by(size) {
        let end = (start + size).min(n);
        let (mut lo, mut hi) = (start, start);
        for i in start..end {
            if y[i] < y[lo] {
                lo = i;
            }
            if y[i] > y[hi] {
                hi = i;
            }
        }
        for i in if lo <= hi { [lo, hi] } else { [hi, lo] } {
            xs.push(x[i]);
            ys.push(y[i]);
            if lo == hi {
                break;
            }
        }
    }
    (xs, ys)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 {
            self.x1 - self.x0
        } else {
            1.0
        };
        MARGIN_L + (x - self.x0) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 {
            self.y1 - self.y0
        } else {
            1.0
        };
        HEIGHT - MARGIN_B - (y - self.y0) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(
    svg: &mut String,
    f: &Frame,
    x_label: &str,
    y_label: &str,
    y_tick_fmt: impl Fn(f64) -> String,
) {
    let (l, r, t, b) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(
        svg,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let xv = f.x0 + (f.x1 - f.x0) * k as f64 / 5.0;
        let yv = f.y0 + (f.y1 - f.y0) * k as f64 / 5.0;
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{b}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.1}" x2="{l}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            y_tick_fmt(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn legend(svg: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN_T + 10.0 + i as f64 * 18.0;
        let x = WIDTH - MARGIN_R + 15.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(name)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart; with `log_y` the values are plotted as `log10(y)` (non-positive points dropped).
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_y: bool,
) -> String {
    let prepared: Vec<(Vec<f64>, Vec<f64>)> = series
        .iter()
        .map(|s| {
            let (x, y): (Vec<f64>, Vec<f64>) = if log_y {
                s.x.iter()
                    .zip(&s.y)
                    .filter(|(_, y)| **y > 0.0)
                    .map(|(x, y)| (*x, y.log10()))
                    .unzip()
            } else {
                (s.x.clone(), s.y.clone())
            };
            downsample(&x, &y, MAX_POINTS)
        })
        .collect();
    let (x0, x1) = bounds(prepared.iter().flat_map(|(x, _)| x.iter().copied()));
    let (y0, y1) = bounds(prepared.iter().flat_map(|(_, y)| y.iter().copied()));
    let f = Frame { x0, x1, y0, y1 };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, x_label, y_label, |v| {
        if log_y {
            format!("1e{v:.1}")
        } else {
            tick(v)
        }
    });
    for (i, (x, y)) in prepared.iter().enumerate() {
        let mut d = String::new();
        for (k, (xv, yv)) in x.iter().zip(y).enumerate() {
            let _ = write!(
                d,
                "{}{:.2} {:.2} ",
                if k == 0 { "M" } else { "L" },
                f.px(*xv),
                f.py(*yv)
            );
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
            d.trim_end(),
            PALETTE[i % PALETTE.len()]
        );
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    legend(&mut svg, &names);
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars: one cluster per category, one bar per group.
pub fn bar_plot(
    title: &str,
    y_label: &str,
    categories: &[String],
    groups: &[(String, Vec<f64>)],
) -> String {
    let (mut y0, mut y1) = bounds(groups.iter().flat_map(|(_, v)| v.iter().copied()));
    y0 = y0.min(0.0);
    y1 = y1.max(0.0);
    let f = Frame {
        x0: 0.0,
        x1: categories.len().max(1) as f64,
        y0,
        y1,
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, "subject", y_label, tick);
    let slot = (f.px(1.0) - f.px(0.0)) * 0.8;
    let bar = slot / groups.len().max(1) as f64;
    for (c, cat) in categories.iter().enumerate() {
        let base = f.px(c as f64) + (f.px(1.0) - f.px(0.0)) * 0.1;
        for (g, (_, values)) in groups.iter().enumerate() {
            let Some(&v) = values.get(c) else { continue };
            let (top, bottom) = (f.py(v.max(0.0)), f.py(v.min(0.0)));
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                base + g as f64 * bar,
                bar.max(0.5),
                (bottom - top).max(0.5),
                PALETTE[g % PALETTE.len()]
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="9">{}</text>"#,
            base + slot / 2.0,
            HEIGHT - MARGIN_B + 30.0,
            escape(cat)
        );
    }
    let zero = f.py(0.0);
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_L}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="gray"/>"#,
        WIDTH - MARGIN_R
    );
    let names: Vec<&str> = groups.iter().map(|(n, _)| n.as_str()).collect();
    legend(&mut svg, &names);
    svg.push_str("</svg>\n");
    svg
}

/// Quartiles by linear interpolation.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

/// Box-and-whisker summary per group (whiskers at min and max).
pub fn box_plot(title: &str, y_label: &str, groups: &[(String, Vec<f64>)]) -> String {
    let (y0, y1) = bounds(groups.iter().flat_map(|(_, v)| v.iter().copied()));
    let f = Frame {
        x0: 0.0,
        x1: groups.len().max(1) as f64,
        y0: y0.min(0.0),
        y1: y1.max(0.0),
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, "filter", y_label, tick);
    let w = (f.px(1.0) - f.px(0.0)) * 0.4;
    for (g, (name, values)) in groups.iter().enumerate() {
        let cx = f.px(g as f64 + 0.5);
        let color = PALETTE[g % PALETTE.len()];
        if let Some([lo, q1, med, q3, hi]) = quartiles(values) {
            let _ = writeln!(
                svg,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                f.py(lo),
                f.py(hi)
            );
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{color}" fill-opacity="0.6" stroke="black"/>"#,
                cx - w / 2.0,
                f.py(q3),
                (f.py(q1) - f.py(q3)).max(0.5)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
                cx - w / 2.0,
                f.py(med),
                cx + w / 2.0,
                f.py(med)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 32.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
