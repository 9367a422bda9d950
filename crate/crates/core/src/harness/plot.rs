//! Success-rate curves as a standalone SVG file with a logarithmic x axis.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::runner::ResultRow;
use crate::bounds::sample_threshold_beta;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    /// Position of the lower-bound line, in samples.
    pub threshold: Option<f64>,
    pub upper_line: Option<f64>,
}

impl PlotOptions {
    /// Threshold at the configured target separability.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        PlotOptions {
            title: format!("n={}, k={}, gamma={}, beta={}", cfg.n, cfg.k, cfg.gamma, cfg.target_beta),
            threshold: sample_threshold_beta(cfg.n, cfg.target_beta).ok(),
            upper_line: cfg.upper_line,
        }
    }

    /// Threshold at the separability recorded in the first row.
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        match rows.first() {
            Some(r) => PlotOptions {
                title: format!("n={}, k={}, gamma={}, beta={:.4}", r.n, r.k, r.gamma, r.beta),
                threshold: sample_threshold_beta(r.n, r.beta).ok(),
                upper_line: None,
            },
            None => PlotOptions {
                title: String::new(),
                threshold: None,
                upper_line: None,
            },
        }
    }
}

/// Maps sample counts to horizontal pixel positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAxis {
    pub lo_decade: i32,
    pub hi_decade: i32,
}

impl LogAxis {
    fn covering(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        if !lo.is_finite() {
            return LogAxis {
                lo_decade: 0,
                hi_decade: 1,
            };
        }
        let lo_decade = lo.floor() as i32;
        let mut hi_decade = hi.ceil() as i32;
        if hi_decade <= lo_decade {
            hi_decade = lo_decade + 1;
        }
        LogAxis { lo_decade, hi_decade }
    }

    /// Axis for `rows` widened to contain the reference lines.
    pub fn for_plot(rows: &[ResultRow], opts: &PlotOptions) -> Self {
        let lines = opts.threshold.into_iter().chain(opts.upper_line);
        LogAxis::covering(rows.iter().map(|r| r.m as f64).chain(lines))
    }

    pub fn x(&self, m: f64) -> f64 {
        let span = (self.hi_decade - self.lo_decade) as f64;
        LEFT + (m.log10() - self.lo_decade as f64) / span * (WIDTH - LEFT - RIGHT)
    }
}

fn y(rate: f64) -> f64 {
    TOP + (1.0 - rate) * (HEIGHT - TOP - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(rows: &[ResultRow], opts: &PlotOptions) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to plot".into()));
    }
    let axis = LogAxis::for_plot(rows, opts);
    let mut s = String::new();
    let w = &mut s;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(&opts.title)
    );
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (y(0.0), y(1.0));
    for d in axis.lo_decade..=axis.hi_decade {
        let x = axis.x(10f64.powi(d));
        let _ = writeln!(w, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#dddddd"/>"##);
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{d}</text>"#,
            y0 + 18.0
        );
    }
    for i in 0..=5 {
        let rate = i as f64 / 5.0;
        let yy = y(rate);
        let _ = writeln!(w, r##"<line x1="{x0}" y1="{yy:.2}" x2="{x1}" y2="{yy:.2}" stroke="#eeeeee"/>"##);
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{rate:.1}</text>"#,
            x0 - 6.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">number of samples (log scale)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">probability of success</text>"#,
        (y0 + y1) / 2.0
    );

    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.solver.as_str()) {
            names.push(&r.solver);
        }
    }
    for (idx, name) in names.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.solver == *name)
            .map(|r| (axis.x(r.m as f64), y(r.success_rate)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" data-solver="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(name),
            path.join(" ")
        );
        for (x, y) in &pts {
            let _ = writeln!(w, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + 20.0 * idx as f64;
        let lx = x1 + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(w, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    let mut legend = names.len();
    for (id, value, color, label) in [
        ("threshold", opts.threshold, "magenta", "lower bound"),
        ("upper", opts.upper_line, "blue", "upper bound"),
    ] {
        let Some(v) = value else { continue };
        let x = axis.x(v);
        let _ = writeln!(
            w,
            r#"<line id="{id}" data-samples="{v}" x1="{x:.4}" y1="{y0}" x2="{x:.4}" y2="{y1}" stroke="{color}" stroke-width="2" stroke-dasharray="6,4"/>"#
        );
        let ly = TOP + 10.0 + 20.0 * legend as f64;
        let lx = x1 + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2" stroke-dasharray="6,4"/>"#,
            lx + 20.0
        );
        let _ = writeln!(w, r#"<text x="{}" y="{}">{label}</text>"#, lx + 26.0, ly + 4.0);
        legend += 1;
    }
    let _ = writeln!(w, "</svg>");
    Ok(s)
}

pub fn emit_plot(rows: &[ResultRow], opts: &PlotOptions, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(rows, opts)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(solver: &str, m: u64, rate: f64) -> ResultRow {
        ResultRow {
            solver: solver.into(),
            n: 7,
            k: 7,
            gamma: 0.1,
            beta: 0.0032,
            m,
            trials: 10,
            successes: (rate * 10.0) as usize,
            success_rate: rate,
            seed: 0,
        }
    }

    #[test]
    fn single_point_plot() {
        let rows = [row("l1_svm", 100, 0.5)];
        let svg = render_svg(&rows, &PlotOptions::from_rows(&rows)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn threshold_line_position() {
        let rows = [row("l1_svm", 10, 0.0), row("l1_svm", 100_000, 1.0), row("ng_russell", 10, 0.0)];
        let cfg = ExperimentConfig::new(7, 7, 0.0032);
        let opts = PlotOptions::from_config(&cfg);
        let svg = render_svg(&rows, &opts).unwrap();
        let t = sample_threshold_beta(7, 0.0032).unwrap();
        let x = LogAxis::for_plot(&rows, &opts).x(t);
        assert!(svg.contains(&format!(r#"id="threshold" data-samples="{t}" x1="{x:.4}""#)));
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert!(!svg.contains(r#"id="upper""#));
    }

    #[test]
    fn axis_is_logarithmic() {
        let axis = LogAxis { lo_decade: 1, hi_decade: 5 };
        let step = axis.x(100.0) - axis.x(10.0);
        assert!((axis.x(1000.0) - axis.x(100.0) - step).abs() < 1e-9);
    }
}
