//! Adaptive wavenumber sampling: solve on a coarse grid, match neighbouring
//! mode sets, bisect every interval whose error indicator is too large, and
//! stitch the assignments into globally labelled branches.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::assembly::SafeMatrices;
use crate::eigensolve::{cluster_degenerate, solve_modes, ModeSet, ModeWindow, DEFAULT_COUPLING_TOL, DEFAULT_EPS_EIG};
use crate::error::{Error, Result};
use crate::tracking::{match_interval, IntervalMatch};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub k_min: f64,
    pub k_max: f64,
    /// Frequency ceiling is `v_p_max · k_max`; infinite keeps every mode.
    pub v_p_max: f64,
    pub eps_bar: f64,
    pub delta_k_min: f64,
    /// Initial uniform grid size (endpoints included).
    pub n0: usize,
    pub eps_eig: f64,
    pub coupling_tol: f64,
    pub max_iterations: usize,
    /// Track degenerate clusters as subspaces; `false` forces pointwise MAC.
    pub subspace_tracking: bool,
    /// Relative guard band above the frequency ceiling.
    pub window_margin: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            k_min: 0.1,
            k_max: 7.0,
            v_p_max: f64::INFINITY,
            eps_bar: 0.05,
            delta_k_min: 1e-3,
            n0: 70,
            eps_eig: DEFAULT_EPS_EIG,
            coupling_tol: DEFAULT_COUPLING_TOL,
            max_iterations: 50,
            subspace_tracking: true,
            window_margin: ModeWindow::DEFAULT_MARGIN,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::InvalidConfig(format!("{field}: {why}")));
        if !(self.k_min.is_finite() && self.k_max.is_finite()) || self.k_min < 0.0 {
            return bad("k_min", format!("range must be finite and non-negative, got [{}, {}]", self.k_min, self.k_max));
        }
        if self.k_min >= self.k_max {
            return bad("k_min", format!("must be below k_max ({} >= {})", self.k_min, self.k_max));
        }
        if self.n0 < 2 {
            return bad("n0", format!("need at least 2 initial points, got {}", self.n0));
        }
        let h0 = (self.k_max - self.k_min) / self.n0 as f64;
        if !(self.delta_k_min > 0.0 && self.delta_k_min < h0) {
            return bad("delta_k_min", format!("must lie in (0, {h0}), got {}", self.delta_k_min));
        }
        if !(self.eps_bar > 0.0 && self.eps_bar < 2.0) {
            return bad("eps_bar", format!("must lie in (0, 2), got {}", self.eps_bar));
        }
        if !(self.v_p_max > 0.0) {
            return bad("v_p_max", format!("must be positive, got {}", self.v_p_max));
        }
        if !(self.eps_eig >= 0.0 && self.coupling_tol >= 0.0) {
            return bad("eps_eig", "degeneracy thresholds must be non-negative".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be at least 1".into());
        }
        if !(self.window_margin >= 0.0) {
            return bad("window_margin", format!("must be non-negative, got {}", self.window_margin));
        }
        Ok(())
    }

    pub fn window(&self) -> ModeWindow {
        if self.v_p_max.is_infinite() {
            ModeWindow::all()
        } else {
            ModeWindow { omega_max: self.v_p_max * self.k_max, margin: self.window_margin }
        }
    }

    /// The uniform initial grid.
    pub fn initial_grid(&self) -> Vec<f64> {
        uniform_grid(self.k_min, self.k_max, self.n0)
    }
}

/// `n` equally spaced points from `a` to `b` inclusive; endpoints exact.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut g: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    g[n - 1] = b;
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDiagnostics {
    pub k_left: f64,
    pub k_right: f64,
    pub epsilon: f64,
    pub refined: bool,
    pub flagged: bool,
    /// Total cost of the optimal assignment.
    pub assignment_cost: f64,
    /// Total cost of pairing objects in frequency order; differs from
    /// `assignment_cost` when the optimum reorders branches.
    pub ordered_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    pub grid: Vec<f64>,
    pub intervals: Vec<IntervalDiagnostics>,
    /// Eigensolves performed in this iteration.
    pub new_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSample {
    pub grid_index: usize,
    pub k: f64,
    /// Mean over the cluster members.
    pub omega: f64,
    /// One value per cluster member (coincident for true degeneracies).
    pub omegas: Vec<f64>,
    pub cluster_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: usize,
    pub samples: Vec<BranchSample>,
}

impl Branch {
    pub fn max_cluster_dim(&self) -> usize {
        self.samples.iter().map(|s| s.cluster_dim).max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionDataset {
    pub grid: Vec<f64>,
    pub branches: Vec<Branch>,
    pub iterations: Vec<IterationDiagnostics>,
    /// Intervals left above tolerance at the minimum step.
    pub flagged: Vec<(f64, f64)>,
    pub exceeded_max_iterations: bool,
    pub omega_max: f64,
}

impl DispersionDataset {
    /// Largest interval error indicator on the final grid.
    pub fn max_epsilon(&self) -> f64 {
        self.iterations
            .last()
            .map(|it| it.intervals.iter().map(|i| i.epsilon).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }

    pub fn final_intervals(&self) -> &[IntervalDiagnostics] {
        self.iterations.last().map_or(&[], |it| &it.intervals)
    }

    /// Total number of eigensolves performed.
    pub fn solve_count(&self) -> usize {
        self.iterations.iter().map(|it| it.new_solves).sum()
    }
}

fn key(k: f64) -> u64 {
    k.to_bits()
}

/// Per-run cache of mode sets and interval matches keyed by exact wavenumber bits.
struct Tracker<'a> {
    m: &'a SafeMatrices,
    window: ModeWindow,
    eps_eig: f64,
    coupling_tol: f64,
    subspace: bool,
    sets: HashMap<u64, ModeSet>,
    matches: HashMap<(u64, u64), IntervalMatch>,
}

impl<'a> Tracker<'a> {
    fn new(m: &'a SafeMatrices, cfg: &AdaptiveConfig) -> Self {
        Self {
            m,
            window: cfg.window(),
            eps_eig: cfg.eps_eig,
            coupling_tol: cfg.coupling_tol,
            subspace: cfg.subspace_tracking,
            sets: HashMap::new(),
            matches: HashMap::new(),
        }
    }

    fn solve_one(&self, k: f64) -> Result<ModeSet> {
        let set = solve_modes(self.m, k, self.window)?;
        if self.subspace {
            cluster_degenerate(self.m, set, self.eps_eig, self.coupling_tol)
        } else {
            Ok(set.singletons())
        }
    }

    /// Solves every grid point not yet cached; returns how many were new.
    fn solve_missing(&mut self, grid: &[f64]) -> Result<usize> {
        let missing: Vec<f64> = grid.iter().copied().filter(|k| !self.sets.contains_key(&key(*k))).collect();
        let solved: Vec<ModeSet> = missing.par_iter().map(|&k| self.solve_one(k)).collect::<Result<_>>()?;
        for (k, s) in missing.iter().zip(solved) {
            self.sets.insert(key(*k), s);
        }
        Ok(missing.len())
    }

    fn match_missing(&mut self, grid: &[f64]) -> Result<()> {
        let pending: Vec<(f64, f64)> = grid
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|(a, b)| !self.matches.contains_key(&(key(*a), key(*b))))
            .collect();
        let done: Vec<IntervalMatch> = pending
            .par_iter()
            .map(|(a, b)| match_interval(&self.sets[&key(*a)], &self.sets[&key(*b)], &self.m.m))
            .collect::<Result<_>>()?;
        for ((a, b), im) in pending.iter().zip(done) {
            self.matches.insert((key(*a), key(*b)), im);
        }
        Ok(())
    }

    fn interval(&self, a: f64, b: f64) -> &IntervalMatch {
        &self.matches[&(key(a), key(b))]
    }

    fn diagnostics(&self, grid: &[f64], eps_bar: f64, delta_k_min: f64, new_solves: usize, refine: bool) -> IterationDiagnostics {
        let intervals = grid
            .windows(2)
            .map(|w| {
                let im = self.interval(w[0], w[1]);
                let dk = w[1] - w[0];
                let over = im.epsilon > eps_bar;
                IntervalDiagnostics {
                    k_left: w[0],
                    k_right: w[1],
                    epsilon: im.epsilon,
                    refined: refine && over && dk > delta_k_min,
                    flagged: over && dk <= delta_k_min,
                    assignment_cost: im.assignment.total_cost,
                    ordered_cost: im.ordered_cost,
                }
            })
            .collect();
        IterationDiagnostics { grid: grid.to_vec(), intervals, new_solves }
    }

    fn dataset(&self, grid: Vec<f64>, iterations: Vec<IterationDiagnostics>, exceeded: bool) -> Result<DispersionDataset> {
        let sets: Vec<&ModeSet> = grid.iter().map(|k| &self.sets[&key(*k)]).collect();
        let matches: Vec<&IntervalMatch> = grid.windows(2).map(|w| self.interval(w[0], w[1])).collect();
        let mut ds = assemble_dataset(&grid, &sets, &matches)?;
        ds.flagged = iterations
            .last()
            .map(|it| it.intervals.iter().filter(|i| i.flagged).map(|i| (i.k_left, i.k_right)).collect())
            .unwrap_or_default();
        ds.iterations = iterations;
        ds.exceeded_max_iterations = exceeded;
        Ok(ds)
    }
}

/// Adaptive sampling driver. Terminates when every interval satisfies
/// `ε ≤ ε̄` or has shrunk to `Δk_min` (flagged). Each distinct wavenumber is
/// solved once; all marked intervals are bisected together per iteration.
pub fn run_adaptive(m: &SafeMatrices, cfg: &AdaptiveConfig) -> Result<DispersionDataset> {
    cfg.validate()?;
    let mut tracker = Tracker::new(m, cfg);
    let mut grid = cfg.initial_grid();
    let mut iterations = Vec::new();
    let mut exceeded = false;
    loop {
        let new_solves = tracker.solve_missing(&grid)?;
        tracker.match_missing(&grid)?;
        let diag = tracker.diagnostics(&grid, cfg.eps_bar, cfg.delta_k_min, new_solves, true);
        let marked: Vec<(f64, f64)> =
            diag.intervals.iter().filter(|i| i.refined).map(|i| (i.k_left, i.k_right)).collect();
        log::debug!(
            "iteration {}: {} points, {} intervals marked, max epsilon {:.4}",
            iterations.len(),
            grid.len(),
            marked.len(),
            diag.intervals.iter().map(|i| i.epsilon).fold(0.0, f64::max)
        );
        iterations.push(diag);
        if marked.is_empty() {
            break;
        }
        if iterations.len() >= cfg.max_iterations {
            log::warn!("adaptive refinement stopped after {} iterations", cfg.max_iterations);
            exceeded = true;
            break;
        }
        grid.extend(marked.iter().map(|(a, b)| 0.5 * (a + b)));
        grid.sort_by(f64::total_cmp);
    }
    tracker.dataset(grid, iterations, exceeded)
}

/// The same matching pipeline on a fixed grid, without refinement.
pub fn uniform_sweep(m: &SafeMatrices, grid: &[f64], cfg: &AdaptiveConfig) -> Result<DispersionDataset> {
    if grid.len() < 2 {
        return Err(Error::InvalidConfig(format!("sweep grid needs at least 2 points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] < 0.0 || !grid[grid.len() - 1].is_finite() {
        return Err(Error::InvalidConfig("sweep grid must be finite, non-negative and strictly increasing".into()));
    }
    let mut tracker = Tracker::new(m, cfg);
    let new_solves = tracker.solve_missing(grid)?;
    tracker.match_missing(grid)?;
    let diag = tracker.diagnostics(grid, cfg.eps_bar, cfg.delta_k_min, new_solves, false);
    tracker.dataset(grid.to_vec(), vec![diag], false)
}

/// Propagates branch labels left to right through the interval assignments.
/// Unmatched right-hand objects start new branches. Only samples inside the
/// reporting window are emitted; labels are renumbered in order of first
/// emitted appearance.
pub fn assemble_dataset(grid: &[f64], sets: &[&ModeSet], matches: &[&IntervalMatch]) -> Result<DispersionDataset> {
    if grid.is_empty() || sets.len() != grid.len() || matches.len() + 1 != grid.len() {
        return Err(Error::Structural(format!(
            "{} grid points, {} mode sets and {} interval matches are inconsistent",
            grid.len(),
            sets.len(),
            matches.len()
        )));
    }
    for (p, im) in matches.iter().enumerate() {
        if im.k_left != grid[p] || im.k_right != grid[p + 1] {
            return Err(Error::Structural(format!(
                "interval {p} covers [{}, {}] but the grid has [{}, {}]",
                im.k_left,
                im.k_right,
                grid[p],
                grid[p + 1]
            )));
        }
        if im.assignment.row_to_col.len() != sets[p].clusters.len() || im.mac.ncols() != sets[p + 1].clusters.len() {
            return Err(Error::Structural(format!("interval {p} does not match its mode sets")));
        }
    }

    let mut next_label = 0usize;
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(grid.len());
    labels.push((0..sets[0].clusters.len()).map(|_| post_inc(&mut next_label)).collect());
    for (p, im) in matches.iter().enumerate() {
        let col_to_row = im.assignment.col_to_row(sets[p + 1].clusters.len());
        let row = col_to_row
            .iter()
            .map(|l| match l {
                Some(l) => labels[p][*l],
                None => post_inc(&mut next_label),
            })
            .collect();
        labels.push(row);
    }

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut branches: Vec<Branch> = Vec::new();
    for (p, set) in sets.iter().enumerate() {
        for c in 0..set.clusters.len() {
            if !set.cluster_in_window(c) {
                continue;
            }
            let raw = labels[p][c];
            let label = *remap.entry(raw).or_insert_with(|| {
                branches.push(Branch { label: branches.len(), samples: Vec::new() });
                branches.len() - 1
            });
            let omegas: Vec<f64> = set.clusters[c].iter().map(|&i| set.omega(i)).collect();
            branches[label].samples.push(BranchSample {
                grid_index: p,
                k: grid[p],
                omega: set.cluster_omega(c),
                cluster_dim: omegas.len(),
                omegas,
            });
        }
    }
    Ok(DispersionDataset {
        grid: grid.to_vec(),
        branches,
        iterations: Vec::new(),
        flagged: Vec::new(),
        exceeded_max_iterations: false,
        omega_max: sets[0].window.omega_max,
    })
}

fn post_inc(x: &mut usize) -> usize {
    *x += 1;
    *x - 1
}
