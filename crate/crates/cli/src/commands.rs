use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use disperkit::verify::{verify_at, ModeOutcome};
use disperkit::{run_adaptive, uniform_grid, uniform_sweep, DispersionDataset};

use crate::config::LoadedConfig;
use crate::dataset::{diagnostics_json, read_csv, rows, to_csv, to_svg, CsvRow};
use crate::error::{CliError, Result};

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    /// A check failed or the inputs were unusable.
    Failure,
    /// Tracing finished but some interval could not be resolved.
    Flagged,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Exit::Success => 0,
            Exit::Failure => 1,
            Exit::Flagged => 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OutputOptions {
    /// Overrides `output.dir` from the config.
    pub out: Option<PathBuf>,
    pub svg: bool,
}

/// Paths written by `trace` and `sweep`.
#[derive(Debug, Clone)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_outputs(cfg: &LoadedConfig, ds: &DispersionDataset, opts: &OutputOptions) -> Result<Written> {
    let o = &cfg.problem.output;
    let dir = opts.out.clone().unwrap_or_else(|| o.dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let written = Written {
        csv: dir.join(&o.csv),
        json: dir.join(&o.json),
        svg: (opts.svg || o.plot).then(|| dir.join(&o.svg)),
    };
    write_file(&written.csv, &to_csv(&rows(ds)))?;
    write_file(&written.json, &diagnostics_json(ds)?)?;
    if let Some(svg) = &written.svg {
        let title = cfg.problem.name.clone().unwrap_or_else(|| cfg.path.display().to_string());
        write_file(svg, &to_svg(ds, &title))?;
    }
    Ok(written)
}

fn io(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

/// Adaptive trace of the configured problem.
pub fn trace(cfg: &LoadedConfig, opts: &OutputOptions, out: &mut dyn Write) -> Result<Exit> {
    let m = cfg.matrices()?;
    let acfg = cfg.problem.adaptive_config();
    log::info!("{} DOFs, k in [{}, {}], omega_max {}", m.n(), acfg.k_min, acfg.k_max, acfg.window().omega_max);
    let ds = run_adaptive(&m, &acfg)?;
    let written = write_outputs(cfg, &ds, opts)?;
    writeln!(
        out,
        "{} grid points ({} initial), {} branches, {} iterations, max epsilon {:.4}",
        ds.grid.len(),
        acfg.n0,
        ds.branches.len(),
        ds.iterations.len(),
        ds.max_epsilon()
    )
    .map_err(io)?;
    writeln!(out, "wrote {} and {}", written.csv.display(), written.json.display()).map_err(io)?;
    if let Some(svg) = &written.svg {
        writeln!(out, "wrote {}", svg.display()).map_err(io)?;
    }
    if ds.exceeded_max_iterations {
        writeln!(out, "warning: stopped at max_iterations = {}", acfg.max_iterations).map_err(io)?;
    }
    if ds.flagged.is_empty() {
        return Ok(Exit::Success);
    }
    for (a, b) in &ds.flagged {
        writeln!(out, "unresolved interval [{a}, {b}]").map_err(io)?;
    }
    Ok(Exit::Flagged)
}

/// `a:b:step`, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step).round() as usize + 1;
        uniform_grid(self.start, self.end, n)
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| CliError::Usage(format!("--grid `{s}`: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts.as_slice() else {
            return Err(bad("expected start:end:step"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("`{t}` is not a number")));
        let (start, end, step) = (num(a)?, num(b)?, num(h)?);
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(bad("need start < end"));
        }
        if !(step > 0.0) {
            return Err(bad("step must be positive"));
        }
        let intervals = (end - start) / step;
        if (intervals - intervals.round()).abs() > 1e-6 * intervals.max(1.0) {
            return Err(bad("step does not divide the range"));
        }
        Ok(Self { start, end, step })
    }
}

/// Uniform sweep on an explicit grid; reports the worst interval.
pub fn sweep(cfg: &LoadedConfig, grid: &GridSpec, opts: &OutputOptions, out: &mut dyn Write) -> Result<Exit> {
    let m = cfg.matrices()?;
    let acfg = cfg.problem.adaptive_config();
    let points = grid.points();
    let ds = uniform_sweep(&m, &points, &acfg)?;
    let written = write_outputs(cfg, &ds, opts)?;
    let over = ds.final_intervals().iter().filter(|iv| iv.epsilon > acfg.eps_bar).count();
    writeln!(out, "{} grid points, {} branches", points.len(), ds.branches.len()).map_err(io)?;
    writeln!(out, "max epsilon {:.6} ({over} intervals above eps_bar = {})", ds.max_epsilon(), acfg.eps_bar).map_err(io)?;
    writeln!(out, "wrote {} and {}", written.csv.display(), written.json.display()).map_err(io)?;
    Ok(Exit::Success)
}

/// Perturbation checks at `samples` wavenumbers across the configured range.
pub fn verify(cfg: &LoadedConfig, samples: Option<usize>, out: &mut dyn Write) -> Result<Exit> {
    let m = cfg.matrices()?;
    let acfg = cfg.problem.adaptive_config();
    let n = samples.unwrap_or(cfg.problem.verify.samples);
    if n == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let ks = if n == 1 { vec![0.5 * (acfg.k_min + acfg.k_max)] } else { uniform_grid(acfg.k_min, acfg.k_max, n) };
    let tol = cfg.problem.verify.tolerances();
    writeln!(out, "{:>8} {:>5} {:>12} {:>10} {:>10} {:>10} {:>10}  status", "k", "mode", "omega", "fd", "self_fit", "cross_fit", "hf")
        .map_err(io)?;
    let (mut checked, mut skipped, mut failed) = (0, 0, 0);
    for k in ks {
        for r in verify_at(&m, k, acfg.window(), acfg.eps_eig, acfg.coupling_tol)? {
            match r.outcome {
                ModeOutcome::Degenerate => {
                    skipped += 1;
                    writeln!(out, "{:>8.4} {:>5} {:>12.6} {:>10} {:>10} {:>10} {:>10}  skipped (degenerate)", r.k, r.mode, r.omega, "-", "-", "-", "-")
                        .map_err(io)?;
                }
                ModeOutcome::Checked(c) => {
                    checked += 1;
                    let ok = c.passes(&tol);
                    failed += usize::from(!ok);
                    let cross = c.cross_fit.map_or("-".to_string(), |(_, f)| format!("{:.2e}", f.relative_error()));
                    writeln!(
                        out,
                        "{:>8.4} {:>5} {:>12.6} {:>10.2e} {:>10.2e} {:>10} {:>10.2e}  {}",
                        r.k,
                        r.mode,
                        r.omega,
                        c.derivative_error,
                        c.self_fit.relative_error(),
                        cross,
                        c.hellmann_feynman_error,
                        if ok { "ok" } else { "FAIL" }
                    )
                    .map_err(io)?;
                }
            }
        }
    }
    writeln!(
        out,
        "{checked} modes checked, {skipped} skipped (degenerate), {failed} failed; tolerances fd {:.0e}, fits {}%, hf {:.0e}",
        tol.derivative,
        100.0 * tol.taylor,
        tol.hellmann_feynman
    )
    .map_err(io)?;
    Ok(if failed == 0 { Exit::Success } else { Exit::Failure })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub grid_a: usize,
    pub grid_b: usize,
    pub shared_points: usize,
    /// Percentage of ω-ranked samples at shared points that carry the same label.
    pub label_agreement: f64,
    /// Over `(k, branch)` pairs present in both.
    pub max_omega_difference: f64,
}

/// Rows grouped by grid point, ascending in k.
fn by_k(rows: &[CsvRow]) -> Vec<(f64, Vec<&CsvRow>)> {
    let mut m: BTreeMap<u64, Vec<&CsvRow>> = BTreeMap::new();
    for r in rows {
        m.entry(r.k.to_bits()).or_default().push(r);
    }
    let mut v: Vec<(f64, Vec<&CsvRow>)> = m.into_values().map(|rs| (rs[0].k, rs)).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    v
}

/// Grid points closer than this (relative) are the same point; bisection
/// midpoints and uniform grids can disagree in the last bits.
const SAME_K: f64 = 1e-9;

pub fn compare_rows(a: &[CsvRow], b: &[CsvRow]) -> Result<Comparison> {
    let (ga, gb) = (by_k(a), by_k(b));
    let (na, nb) = (ga.first().map_or(0, |g| g.1.len()), gb.first().map_or(0, |g| g.1.len()));
    if na == 0 || nb == 0 {
        return Err(CliError::Incompatible("empty dataset".into()));
    }
    if na != nb {
        return Err(CliError::Incompatible(format!("{na} vs {nb} branches at k_min")));
    }
    let ranked = |rs: &[&CsvRow]| {
        let mut v: Vec<(f64, usize)> = rs.iter().map(|r| (r.omega, r.branch)).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        v
    };
    let (mut shared, mut total, mut agree) = (0, 0usize, 0usize);
    let mut max_dw = 0.0_f64;
    let (mut i, mut j) = (0, 0);
    while i < ga.len() && j < gb.len() {
        let (ka, kb) = (ga[i].0, gb[j].0);
        if (ka - kb).abs() > SAME_K * ka.abs().max(1.0) {
            if ka < kb {
                i += 1;
            } else {
                j += 1;
            }
            continue;
        }
        let (ra, rb) = (&ga[i].1, &gb[j].1);
        shared += 1;
        let (sa, sb) = (ranked(ra), ranked(rb));
        total += sa.len().max(sb.len());
        agree += sa.iter().zip(&sb).filter(|(x, y)| x.1 == y.1).count();
        for x in ra {
            if let Some(y) = rb.iter().find(|y| y.branch == x.branch) {
                max_dw = max_dw.max((x.omega - y.omega).abs());
            }
        }
        i += 1;
        j += 1;
    }
    Ok(Comparison {
        grid_a: ga.len(),
        grid_b: gb.len(),
        shared_points: shared,
        label_agreement: if total == 0 { 100.0 } else { 100.0 * agree as f64 / total as f64 },
        max_omega_difference: max_dw,
    })
}

pub fn compare(a: &Path, b: &Path, out: &mut dyn Write) -> Result<Exit> {
    let c = compare_rows(&read_csv(a)?, &read_csv(b)?)?;
    writeln!(out, "grid sizes: {} ({}) vs {} ({})", c.grid_a, a.display(), c.grid_b, b.display()).map_err(io)?;
    writeln!(out, "shared grid points: {}", c.shared_points).map_err(io)?;
    writeln!(out, "branch label agreement: {:.2}%", c.label_agreement).map_err(io)?;
    writeln!(out, "max |delta omega|: {:e}", c.max_omega_difference).map_err(io)?;
    Ok(Exit::Success)
}
