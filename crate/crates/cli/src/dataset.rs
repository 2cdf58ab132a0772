//! Dataset files: CSV curves, JSON refinement diagnostics, SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use disperkit::DispersionDataset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "k,branch,omega,vp,cluster_dim";

/// One `(grid point, branch)` sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub k: f64,
    pub branch: usize,
    pub omega: f64,
    /// Empty at `k = 0`.
    pub vp: Option<f64>,
    pub cluster_dim: usize,
}

/// Rows ordered by `k`, then branch label.
pub fn rows(ds: &DispersionDataset) -> Vec<CsvRow> {
    let mut at: Vec<Vec<CsvRow>> = vec![Vec::new(); ds.grid.len()];
    for b in &ds.branches {
        for s in &b.samples {
            at[s.grid_index].push(CsvRow {
                k: s.k,
                branch: b.label,
                omega: s.omega,
                vp: (s.k != 0.0).then(|| s.omega / s.k),
                cluster_dim: s.cluster_dim,
            });
        }
    }
    for r in &mut at {
        r.sort_by_key(|row| row.branch);
    }
    at.into_iter().flatten().collect()
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn to_csv(rows: &[CsvRow]) -> String {
    let mut w = csv_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).expect("writing to memory");
    }
    for r in rows {
        w.serialize(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is ASCII")
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(CliError::Dataset { path: path.into(), line: 1, message: format!("expected header `{CSV_HEADER}`") });
    }
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        kind => CliError::Dataset { path: path.into(), line, message: format!("{kind:?}") },
    }
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    iterations: Vec<Iteration<'a>>,
}

#[derive(Serialize)]
struct Iteration<'a> {
    grid: &'a [f64],
    intervals: Vec<Interval>,
}

#[derive(Serialize)]
struct Interval {
    k_left: f64,
    k_right: f64,
    epsilon: f64,
    refined: bool,
    flagged: bool,
}

/// `{iterations: [{grid, intervals: [{k_left, k_right, epsilon, refined, flagged}]}]}`.
pub fn diagnostics_json(ds: &DispersionDataset) -> Result<String> {
    let d = Diagnostics {
        iterations: ds
            .iterations
            .iter()
            .map(|it| Iteration {
                grid: &it.grid,
                intervals: it
                    .intervals
                    .iter()
                    .map(|iv| Interval {
                        k_left: iv.k_left,
                        k_right: iv.k_right,
                        epsilon: iv.epsilon,
                        refined: iv.refined,
                        flagged: iv.flagged,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&d)?;
    s.push('\n');
    Ok(s)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// ω against k, one polyline per branch. Branches that are ever part of a
/// degenerate cluster are dashed.
pub fn to_svg(ds: &DispersionDataset, title: &str) -> String {
    let (w, h, pad) = (800.0, 500.0, 50.0);
    let k0 = ds.grid.first().copied().unwrap_or(0.0);
    let k1 = ds.grid.last().copied().unwrap_or(1.0).max(k0 + 1e-12);
    let top = if ds.omega_max.is_finite() {
        ds.omega_max
    } else {
        ds.branches.iter().flat_map(|b| b.samples.iter().map(|s| s.omega)).fold(0.0, f64::max)
    }
    .max(1e-12);
    let x = |k: f64| pad + (k - k0) / (k1 - k0) * (w - 2.0 * pad);
    let y = |o: f64| h - pad - o.min(top) / top * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="25" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<polyline points="{pad},{pad} {pad},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">k</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" font-family="sans-serif" font-size="12">ω</text>"#, h / 2.0);
    for (i, v) in [(0, k0), (1, k1)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="10" text-anchor="{}">{v:.3}</text>"#,
            x(v),
            h - pad + 15.0,
            if i == 0 { "start" } else { "end" }
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{top:.3}</text>"#, pad - 5.0, y(top) + 4.0);
    for b in &ds.branches {
        let colour = PALETTE[b.label % PALETTE.len()];
        let dash = if b.max_cluster_dim() > 1 { r#" stroke-dasharray="6 3""# } else { "" };
        let points: Vec<String> = b.samples.iter().map(|p| format!("{:.2},{:.2}", x(p.k), y(p.omega))).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-branch="{}" points="{}" fill="none" stroke="{colour}" stroke-width="1.2"{dash}/>"#,
            b.label,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
