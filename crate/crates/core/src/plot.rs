//! Minimal SVG line charts with a logarithmic y axis.

use std::fmt::Write;

use crate::experiment::AggregateRow;

/// Values below this are drawn at this height.
pub const LOG_CLAMP: f64 = 1e-12;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LogPlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with_series(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points });
        self
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            let ly = y.max(LOG_CLAMP).log10();
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(ly);
            y1 = y1.max(ly);
        }
        if !x0.is_finite() {
            return ((0.0, 1.0), (-1.0, 0.0));
        }
        if x1 - x0 < 1e-15 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        ((x0, x1), (y0.floor(), y1.ceil().max(y0.floor() + 1.0)))
    }

    pub fn to_svg(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y.max(LOG_CLAMP).log10()) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&self.title));

        let decades = (y1 - y0).round() as i64;
        for d in 0..=decades {
            let e = y0 as i64 + d;
            let y = TOP + (y1 - e as f64) / (y1 - y0) * ph;
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
        }
        for t in 0..=4 {
            let x = x0 + (x1 - x0) * t as f64 / 4.0;
            let px = sx(x);
            let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#eee"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, fmt_tick(x));
        }
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
            for &(x, y) in &series.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One plot per `(n, k, lambda)`: mean RMSE against noise level, one line
/// per method plus the noisy input.
pub fn sweep_plots(rows: &[AggregateRow], wrap: bool) -> Vec<(String, LogPlot)> {
    let mut keys: Vec<(usize, usize, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(n, k, l)| n == r.n && k == r.k && l == r.lambda) {
            keys.push((r.n, r.k, r.lambda));
        }
    }
    let metric = if wrap { "wrap" } else { "shifted" };
    let mut out = Vec::new();
    for (n, k, lambda) in keys {
        let cell: Vec<&AggregateRow> = rows.iter().filter(|r| r.n == n && r.k == k && r.lambda == lambda).collect();
        let model = cell.first().map(|r| r.noise_model.clone()).unwrap_or_default();
        let y_label = if wrap { "mean wrap RMSE of f mod 1" } else { "mean RMSE of f after shift" };
        let mut plot = LogPlot::new(format!("n={n}, k={k}, lambda={lambda}"), format!("{model} noise level"), y_label);
        let mut methods: Vec<String> = Vec::new();
        for r in &cell {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        if wrap {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            for r in cell.iter().filter(|r| r.method == methods[0]) {
                pts.push((r.noise_level, r.mean_noisy_wrap_rmse));
            }
            plot = plot.with_series("noisy", pts);
        }
        for m in methods {
            let pts = cell
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.noise_level, if wrap { r.mean_wrap_rmse_mod1 } else { r.mean_shifted_rmse_f }))
                .collect();
            plot = plot.with_series(m, pts);
        }
        out.push((format!("{metric}_n{n}_k{k}_lambda{lambda}.svg"), plot));
    }
    out
}
