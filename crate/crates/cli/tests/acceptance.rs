//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p disperkit-cli --test acceptance`. Exits non-zero
//! if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use disperkit::eigensolve::{cluster_degenerate, relative_gap, solve_modes, ModeWindow};
use disperkit::perturbation::{estimate_step_bound, CouplingTable, strongest_coupling};
use disperkit::{run_adaptive, uniform_grid, uniform_sweep, AdaptiveConfig, DispersionDataset};
use disperkit_cli::LoadedConfig;
use num_complex::Complex64 as c64;
use support::criteria::{self, Outcome};
use support::families::rotate_annulus_field;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> LoadedConfig {
    LoadedConfig::load(configs().join(format!("{name}.toml"))).expect("shipped config loads")
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

/// Branch ω-order swaps between consecutive grid points, split by whether
/// the interval came from refinement.
fn order_swaps(ds: &DispersionDataset, coarse_step: f64) -> (usize, usize) {
    let mut at: Vec<HashMap<usize, f64>> = vec![HashMap::new(); ds.grid.len()];
    for b in &ds.branches {
        for s in &b.samples {
            at[s.grid_index].insert(b.label, s.omega);
        }
    }
    let (mut refined, mut unrefined) = (0, 0);
    for p in 0..ds.grid.len().saturating_sub(1) {
        let fine = ds.grid[p + 1] - ds.grid[p] < 0.75 * coarse_step;
        for (&i, &wi) in &at[p] {
            for (&j, &wj) in &at[p] {
                if i >= j {
                    continue;
                }
                if let (Some(&a), Some(&b)) = (at[p + 1].get(&i), at[p + 1].get(&j)) {
                    if (wi - wj).signum() != (a - b).signum() {
                        if fine {
                            refined += 1;
                        } else {
                            unrefined += 1;
                        }
                    }
                }
            }
        }
    }
    (refined, unrefined)
}

fn ac6() -> Outcome {
    let cfg = load("symmetric_laminate");
    let m = cfg.matrices().unwrap();
    let acfg = cfg.problem.adaptive_config();
    let h0 = (acfg.k_max - acfg.k_min) / (acfg.n0 - 1) as f64;

    // (a) The coarse grid misses a veering: inside the worst interval some
    // mode's local critical step is shorter than the interval itself.
    let coarse = uniform_sweep(&m, &acfg.initial_grid(), &acfg).unwrap();
    let worst = coarse.final_intervals().iter().max_by(|a, b| a.epsilon.total_cmp(&b.epsilon)).unwrap().clone();
    let adaptive = run_adaptive(&m, &acfg).unwrap();
    let inside: Vec<f64> = adaptive.grid.iter().copied().filter(|k| *k > worst.k_left && *k < worst.k_right).collect();
    let mut critical = f64::INFINITY;
    let mut pair_gap = f64::NAN;
    for &k in &inside {
        let set = solve_modes(&m, k, ModeWindow::all()).unwrap();
        let set = cluster_degenerate(&m, set, acfg.eps_eig, acfg.coupling_tol).unwrap();
        let kp = m.stiffness_derivative_at(k);
        let table = CouplingTable::from_family(&m, &set);
        for i in (0..set.len()).filter(|&i| set.omega(i) <= adaptive.omega_max) {
            let Ok(est) = estimate_step_bound(&set, i, &kp, 1.0) else { continue };
            if est.delta_k_max < critical {
                critical = est.delta_k_max;
                if let Ok(Some(c)) = strongest_coupling(&set, &table, i) {
                    pair_gap = relative_gap(set.eigenvalues[c.i], set.eigenvalues[c.j]);
                }
            }
        }
    }
    let a = worst.epsilon > acfg.eps_bar && critical < worst.k_right - worst.k_left;

    // (b) Adaptive run converges.
    let b = adaptive.max_epsilon() <= acfg.eps_bar && adaptive.flagged.is_empty() && !adaptive.exceeded_max_iterations;

    // (c) Halve the uniform step until the same bound holds.
    let mut n = acfg.n0;
    let mut uniform = None;
    for _ in 0..8 {
        n = 2 * (n - 1) + 1;
        let u = uniform_sweep(&m, &uniform_grid(acfg.k_min, acfg.k_max, n), &acfg).unwrap();
        if u.max_epsilon() <= acfg.eps_bar {
            uniform = Some(n);
            break;
        }
    }
    let (c, savings) = match uniform {
        Some(u) => {
            let s = 1.0 - adaptive.grid.len() as f64 / u as f64;
            (adaptive.grid.len() < u && s >= 0.3, s)
        }
        None => (false, f64::NAN),
    };
    outcome(
        a && b && c,
        format!(
            "(a) coarse worst epsilon {:.3} on [{:.2}, {:.2}] (step {h0:.2}), min critical step inside {critical:.2e}, strongest pair gap {pair_gap:.1e}; \
             (b) adaptive {} points, max epsilon {:.4}, flagged {}; (c) uniform needs {} points, savings {:.0}%",
            worst.epsilon,
            worst.k_left,
            worst.k_right,
            adaptive.grid.len(),
            adaptive.max_epsilon(),
            adaptive.flagged.len(),
            uniform.map_or("> 2^8 halvings".to_string(), |u| u.to_string()),
            100.0 * savings
        ),
    )
}

fn ac7() -> Outcome {
    let cfg = load("unsymmetric_laminate");
    let m = cfg.matrices().unwrap();
    let acfg = cfg.problem.adaptive_config();
    let h0 = (acfg.k_max - acfg.k_min) / (acfg.n0 - 1) as f64;
    let ds = run_adaptive(&m, &acfg).unwrap();
    let clustered = ds.branches.iter().filter(|b| b.max_cluster_dim() > 1).count();
    let (refined_swaps, unrefined_swaps) = order_swaps(&ds, h0);
    let passed = clustered == 0 && unrefined_swaps == 0 && ds.max_epsilon() <= acfg.eps_bar && ds.flagged.is_empty();
    outcome(
        passed,
        format!(
            "{} points, {} branches, clustered branches {clustered}, order swaps: {unrefined_swaps} on unrefined intervals, {refined_swaps} on refined ones; max epsilon {:.4}",
            ds.grid.len(),
            ds.branches.len(),
            ds.max_epsilon()
        ),
    )
}

fn ac8() -> Outcome {
    let cfg = load("annulus");
    let geometry = cfg.problem.annulus.clone().unwrap();
    let m = cfg.matrices().unwrap();
    let acfg = cfg.problem.adaptive_config();

    // (a) Every in-window mode is either one of a d = 2 cluster with a tight
    // gap, or a one-dimensional representation (±1 under a one-element turn).
    let (mut pairs, mut singles, mut a) = (0, 0, true);
    let mut worst_gap = 0.0_f64;
    for k in [acfg.k_min, 0.5, 1.0] {
        let set = solve_modes(&m, k, acfg.window()).unwrap();
        let set = cluster_degenerate(&m, set, acfg.eps_eig, acfg.coupling_tol).unwrap();
        for (c, members) in set.clusters.iter().enumerate() {
            if !set.cluster_in_window(c) {
                continue;
            }
            let q = set.cluster_basis(c);
            match members.len() {
                2 => {
                    pairs += 1;
                    let gap = relative_gap(set.eigenvalues[members[0]], set.eigenvalues[members[1]]);
                    worst_gap = worst_gap.max(gap);
                    a &= gap <= 1e-6;
                }
                1 => {
                    singles += 1;
                    let rq = rotate_annulus_field(&q, geometry.n_circ, geometry.n_rad);
                    let overlap: c64 = (0..q.nrows()).map(|i| q[(i, 0)].conj() * m.m.get(i, i) * rq[(i, 0)]).sum();
                    let sign = overlap.re.signum();
                    let diff = (0..q.nrows()).map(|i| (rq[(i, 0)] - q[(i, 0)] * sign).norm()).fold(0.0, f64::max);
                    a &= diff < 1e-6;
                }
                _ => a = false,
            }
        }
    }
    a &= pairs > 0;

    // (b) Subspace tracking converges.
    let sub = run_adaptive(&m, &acfg).unwrap();
    let b = sub.max_epsilon() <= acfg.eps_bar && sub.flagged.is_empty();

    // (c) Pointwise tracking on the low-k part of the range cannot converge.
    let point_cfg = AdaptiveConfig { k_max: 1.0, n0: 10, subspace_tracking: false, ..acfg };
    let point = run_adaptive(&m, &point_cfg).unwrap();
    let low_k_flagged = point
        .final_intervals()
        .iter()
        .filter(|iv| iv.flagged && iv.k_right <= 1.0 && iv.k_right - iv.k_left <= acfg.delta_k_min && iv.epsilon > acfg.eps_bar)
        .count();
    let c = low_k_flagged > 0;
    outcome(
        a && b && c,
        format!(
            "(a) {pairs} pairs (worst gap {worst_gap:.1e}), {singles} symmetric singletons; (b) subspace: {} points, max epsilon {:.4}, flagged {}; \
             (c) pointwise on k in [{}, 1]: {} points, {low_k_flagged} intervals flagged at delta_k_min",
            sub.grid.len(),
            sub.max_epsilon(),
            sub.flagged.len(),
            point_cfg.k_min,
            point.grid.len()
        ),
    )
}

fn ac10() -> Outcome {
    let cfg = configs().join("symmetric_laminate.toml");
    let mut outputs: Vec<(String, Vec<u8>, Vec<u8>)> = Vec::new();
    for threads in ["1", "2", "4", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_disperkit"))
            .args(["trace", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--threads", threads])
            .output()
            .unwrap();
        if o.status.code() != Some(0) {
            return outcome(false, format!("trace --threads {threads} exited {:?}", o.status.code()));
        }
        outputs.push((
            threads.to_string(),
            std::fs::read(dir.path().join("symmetric_laminate.csv")).unwrap(),
            std::fs::read(dir.path().join("symmetric_laminate.json")).unwrap(),
        ));
    }
    let same = outputs.iter().all(|o| o.1 == outputs[0].1 && o.2 == outputs[0].2);
    outcome(same, format!("{} trace runs (--threads 1, 2, 4, 4): CSV and JSON byte-identical: {same}", outputs.len()))
}

fn main() {
    let criteria: Vec<(&str, &str, Box<dyn Fn() -> Outcome>)> = vec![
        ("AC1", "MAC and subspace-MAC properties", Box::new(|| criteria::mac_properties(1000))),
        ("AC2", "Hungarian matches exhaustive search", Box::new(|| criteria::hungarian_oracle(500))),
        ("AC3", "eigenvector derivative against finite differences", Box::new(criteria::perturbation_oracle)),
        ("AC4", "half critical step tracks a veering, ten widths does not", Box::new(criteria::theorem_one)),
        ("AC5", "aluminium plate against Rayleigh-Lamb", Box::new(criteria::rayleigh_lamb_plate)),
        ("AC6", "symmetric laminate: adaptive beats halving uniform grids", Box::new(ac6)),
        ("AC7", "unsymmetric laminate: veering only", Box::new(ac7)),
        ("AC8", "pipe: degenerate pairs need subspace tracking", Box::new(ac8)),
        ("AC9", "protected crossing needs no refinement", Box::new(criteria::protected_crossing)),
        ("AC10", "trace output independent of thread count", Box::new(ac10)),
    ];
    let mut failed = 0;
    for (id, title, check) in &criteria {
        let start = Instant::now();
        let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        failed += usize::from(!o.passed);
        println!(
            "{id} {} {title} ({:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
