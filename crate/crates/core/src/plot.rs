//! Line charts of comparison results as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::{read_results, ResultRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean total execution time against task count.
    TimeVsTasks,
    /// Mean utilization against task count.
    UtilVsTasks,
    /// Mean migration count against mean total execution time.
    MigrationsVsTime,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [
        PlotKind::TimeVsTasks,
        PlotKind::UtilVsTasks,
        PlotKind::MigrationsVsTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::TimeVsTasks => "time_vs_tasks",
            PlotKind::UtilVsTasks => "util_vs_tasks",
            PlotKind::MigrationsVsTime => "migrations_vs_time",
        }
    }

    fn labels(self) -> (&'static str, &'static str, &'static str) {
        match self {
            PlotKind::TimeVsTasks => (
                "Total execution time vs number of tasks",
                "Number of tasks",
                "Total execution time (s)",
            ),
            PlotKind::UtilVsTasks => (
                "Resource utilization vs number of tasks",
                "Number of tasks",
                "Utilization (fraction)",
            ),
            PlotKind::MigrationsVsTime => (
                "Migrations vs total execution time",
                "Total execution time (s)",
                "Migrations (count)",
            ),
        }
    }

    fn point(self, rows: &[&ResultRow]) -> (f64, f64) {
        let mean = |f: fn(&ResultRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
        match self {
            PlotKind::TimeVsTasks => (rows[0].n_tasks as f64, mean(|r| r.t_total)),
            PlotKind::UtilVsTasks => (rows[0].n_tasks as f64, mean(|r| r.utilization)),
            PlotKind::MigrationsVsTime => (mean(|r| r.t_total), mean(|r| r.migration_count as f64)),
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown plot kind {s:?} (expected time_vs_tasks, util_vs_tasks or migrations_vs_time)"
                ))
            })
    }
}

/// One polyline per algorithm, in first-appearance order. Points are the
/// per-scale means, ordered by x.
pub fn series(rows: &[ResultRow], kind: PlotKind) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut algorithms: Vec<&str> = Vec::new();
    for r in rows {
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
    }
    algorithms
        .into_iter()
        .map(|alg| {
            let mut scales: Vec<usize> = rows
                .iter()
                .filter(|r| r.algorithm == alg)
                .map(|r| r.n_tasks)
                .collect();
            scales.sort_unstable();
            scales.dedup();
            let mut points: Vec<(f64, f64)> = scales
                .into_iter()
                .map(|n| {
                    let cell: Vec<&ResultRow> =
                        rows.iter().filter(|r| r.algorithm == alg && r.n_tasks == n).collect();
                    kind.point(&cell)
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            (alg.to_string(), points)
        })
        .collect()
}

fn axis_range(values: impl Iterator<Item = f64>, from_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if from_zero {
        lo = lo.min(0.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders rows as an SVG document. An empty row set still yields axes.
pub fn render_svg(rows: &[ResultRow], kind: PlotKind) -> String {
    let (title, xlabel, ylabel) = kind.labels();
    let lines = series(rows, kind);
    let points = || lines.iter().flat_map(|(_, p)| p.iter().copied());
    let (x0, x1) = axis_range(points().map(|p| p.0), false);
    let (y0, y1) = axis_range(points().map(|p| p.1), true);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#,
        LEFT + pw / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + ph
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{0}" x2="{px:.2}" y2="{1}" stroke="black"/><text x="{px:.2}" y="{2}" text-anchor="middle">{3}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{1}" y="{2:.2}" text-anchor="end">{3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{ylabel}</text>"#,
        TOP + ph / 2.0
    );

    for (i, (name, pts)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Reads a results CSV and writes the chart to `output`.
pub fn plot_file(input: &Path, output: &Path, kind: PlotKind) -> Result<()> {
    let file = std::fs::File::open(input).map_err(|e| Error::io(input, e))?;
    let rows = read_results(file)?;
    std::fs::write(output, render_svg(&rows, kind)).map_err(|e| Error::io(output, e))
}
