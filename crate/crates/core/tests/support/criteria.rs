//! Criterion-level checks shared by the core tests and the acceptance suite.

use disperkit::adaptive::{run_adaptive, AdaptiveConfig};
use disperkit::eigensolve::{solve_modes, ModeWindow};
use disperkit::hungarian::hungarian;
use disperkit::tracking::{mac, subspace_mac};
use disperkit::verify::{verify_at, ModeOutcome, Tolerances};
use faer::Mat;
use num_complex::Complex64 as c64;
use rand::Rng;

use super::families::{aluminium_plate, block_crossing, walk_half_bound, ordered_separations, Veering, ALUMINIUM};
use super::random::{column, m_orthonormal_basis, random_family, random_spd, random_unitary, rng, sparse};
use super::rayleigh_lamb::{a0, s0, sh0, IsotropicPlate};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn rotate(q: &Mat<c64>, u: &Mat<c64>) -> Mat<c64> {
    q * u
}

/// MAC and subspace-MAC invariants over random M-orthonormal inputs.
pub fn mac_properties(trials: usize) -> Outcome {
    let mut worst = 0.0_f64;
    let mut range_ok = true;
    for t in 0..trials {
        let mut r = rng(0xAC1 + t as u64);
        let n = r.gen_range(2..=50);
        let m = random_spd(&mut r, n);
        let ms = sparse(&m);
        let da = r.gen_range(1..=n.min(4));
        let db = r.gen_range(1..=n.min(4));
        let qa = m_orthonormal_basis(&mut r, &m, da);
        let qb = m_orthonormal_basis(&mut r, &m, db);
        let base = subspace_mac(&qa, &qb, &ms).unwrap();
        range_ok &= (-1e-12..=1.0 + 1e-12).contains(&base);
        // Symmetry.
        worst = worst.max((subspace_mac(&qb, &qa, &ms).unwrap() - base).abs());
        // Rotation invariance (includes per-column phases).
        let (ua, ub) = (random_unitary(&mut r, da), random_unitary(&mut r, db));
        worst = worst.max((subspace_mac(&rotate(&qa, &ua), &rotate(&qb, &ub), &ms).unwrap() - base).abs());
        // Self-MAC of a subspace is 1.
        worst = worst.max((subspace_mac(&qa, &qa, &ms).unwrap() - 1.0).abs());
        // d = 1 reduction and phase invariance of the pointwise MAC.
        let (a, b) = (column(&qa, 0), column(&qb, 0));
        let single = mac(&a, &b, &ms).unwrap();
        range_ok &= (-1e-12..=1.0 + 1e-12).contains(&single);
        let as_sub = subspace_mac(
            &Mat::from_fn(n, 1, |i, _| a[i]),
            &Mat::from_fn(n, 1, |i, _| b[i]),
            &ms,
        )
        .unwrap();
        worst = worst.max((as_sub - single).abs());
        let (pa, pb) = (c64::from_polar(1.0, r.gen_range(0.0..6.3)), c64::from_polar(1.0, r.gen_range(0.0..6.3)));
        let a_rot: Vec<c64> = a.iter().map(|x| x * pa).collect();
        let b_rot: Vec<c64> = b.iter().map(|x| x * pb).collect();
        worst = worst.max((mac(&a_rot, &b_rot, &ms).unwrap() - single).abs());
    }
    Outcome::new(range_ok && worst <= 1e-12, format!("{trials} trials, max invariant deviation {worst:.1e}"))
}

fn brute_force(cost: &Mat<f64>) -> f64 {
    let (nr, nc) = (cost.nrows(), cost.ncols());
    let (small, large, at): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if nr <= nc {
        (nr, nc, Box::new(|i, j| cost[(i, j)]))
    } else {
        (nc, nr, Box::new(|i, j| cost[(j, i)]))
    };
    fn rec(i: usize, small: usize, large: usize, used: &mut [bool], acc: f64, at: &dyn Fn(usize, usize) -> f64, best: &mut f64) {
        if i == small {
            *best = best.min(acc);
            return;
        }
        for j in 0..large {
            if !used[j] {
                used[j] = true;
                rec(i + 1, small, large, used, acc + at(i, j), at, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, small, large, &mut vec![false; large], 0.0, &*at, &mut best);
    best
}

/// Hungarian optimum against exhaustive enumeration.
pub fn hungarian_oracle(trials: usize) -> Outcome {
    let mut worst = 0.0_f64;
    let mut structural = true;
    for t in 0..trials {
        let mut r = rng(0xAC2 + t as u64);
        let small = r.gen_range(1..=6);
        let large = r.gen_range(small..=small + 2);
        let (nr, nc) = if r.gen_bool(0.5) { (small, large) } else { (large, small) };
        // A third of the trials use coarse integer costs to exercise ties.
        let ties = t % 3 == 0;
        let cost = Mat::from_fn(nr, nc, |_, _| if ties { r.gen_range(0..4) as f64 } else { r.gen_range(0.0..1.0) });
        let a = hungarian(&cost);
        let pairs: Vec<(usize, usize)> = a.pairs().collect();
        let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        cols.dedup();
        structural &= pairs.len() == small && cols.len() == small;
        let sum: f64 = pairs.iter().map(|&(i, j)| cost[(i, j)]).sum();
        structural &= (sum - a.total_cost).abs() <= 1e-12;
        worst = worst.max((a.total_cost - brute_force(&cost)).abs());
    }
    Outcome::new(structural && worst <= 1e-12, format!("{trials} trials, max cost gap {worst:.1e}"))
}

/// Summary of one verification sweep.
#[derive(Debug, Default, Clone, Copy)]
pub struct VerifySummary {
    pub checked: usize,
    pub skipped: usize,
    pub failed: usize,
    pub worst_derivative: f64,
    pub worst_taylor: f64,
    pub worst_hf: f64,
}

pub fn summarize(m: &disperkit::SafeMatrices, ks: &[f64], into: &mut VerifySummary) {
    let tol = Tolerances::default();
    for &k in ks {
        for row in verify_at(m, k, ModeWindow::all(), 1e-6, 1e-6).unwrap() {
            match row.outcome {
                ModeOutcome::Degenerate => into.skipped += 1,
                ModeOutcome::Checked(c) => {
                    into.checked += 1;
                    if !c.passes(&tol) {
                        into.failed += 1;
                    }
                    into.worst_derivative = into.worst_derivative.max(c.derivative_error);
                    let mut t = c.self_fit.relative_error();
                    if let Some((_, f)) = c.cross_fit {
                        t = t.max(f.relative_error());
                    }
                    into.worst_taylor = into.worst_taylor.max(t);
                    into.worst_hf = into.worst_hf.max(c.hellmann_feynman_error);
                }
            }
        }
    }
}

/// Derivative expansion against finite differences, plus Taylor fits, on
/// random complete-spectrum families and a small aluminium plate.
pub fn perturbation_oracle() -> Outcome {
    let mut random = VerifySummary::default();
    for t in 0..20 {
        let mut r = rng(0xAC3 + t);
        let m = random_family(&mut r, 10);
        let ks: Vec<f64> = (0..3).map(|_| r.gen_range(0.2..2.0)).collect();
        summarize(&m, &ks, &mut random);
    }
    let mut plate = VerifySummary::default();
    summarize(&aluminium_plate(2, 4), &[0.5, 1.4, 2.3, 3.2, 4.1], &mut plate);
    let passed = random.failed == 0 && plate.failed == 0 && random.checked > 0 && plate.checked > 0;
    Outcome::new(
        passed,
        format!(
            "random: {} modes, {} failed, max FD error {:.1e}, max fit error {:.1e}; plate: {} modes, {} failed, max FD error {:.1e}, max fit error {:.1e}",
            random.checked,
            random.failed,
            random.worst_derivative,
            random.worst_taylor,
            plate.checked,
            plate.failed,
            plate.worst_derivative,
            plate.worst_taylor
        ),
    )
}

/// Half-bound stepping tracks the veering; a step ten widths wide does not.
pub fn theorem_one() -> Outcome {
    let v = Veering::centred(0.05, 4);
    let m = v.family();
    let (min_d, steps) = walk_half_bound(&m, v.centre() - 0.5, v.centre() + 0.5, 0.1);
    let wide = 10.0 * v.width();
    let d = ordered_separations(&m, v.centre() - 0.5 * wide, v.centre() + 0.5 * wide);
    let wide_min = d[0].min(d[1]);
    Outcome::new(
        min_d > 0.0 && wide_min < 0.0,
        format!("half-bound walk: {steps} steps, min D {min_d:.3}; step 10W = {wide:.2}: min D {wide_min:.3}"),
    )
}

/// Fundamental A0, S0 and SH0 phase velocities against Rayleigh–Lamb.
pub fn rayleigh_lamb_plate() -> Outcome {
    let (e, nu, rho, c_t) = ALUMINIUM;
    let p = IsotropicPlate::from_engineering(e, nu, rho, c_t);
    let m = aluminium_plate(4, 6);
    let mut worst = 0.0_f64;
    for i in 0..=18 {
        let k = 0.5 + 0.25 * i as f64;
        let set = solve_modes(&m, k, ModeWindow::all()).unwrap();
        let mut exact = [a0(&p, k), s0(&p, k), sh0(&p, k)];
        exact.sort_by(f64::total_cmp);
        for (j, x) in exact.iter().enumerate() {
            worst = worst.max((set.omega(j) - x).abs() / x);
        }
    }
    Outcome::new(worst <= 5e-3, format!("k in [0.5, 5], max relative phase-velocity error {worst:.1e}"))
}

/// Block-diagonal family with crossing blocks: no refinement, branches cross.
pub fn protected_crossing() -> Outcome {
    let m = block_crossing();
    let cfg = AdaptiveConfig { k_min: 0.1, k_max: 3.0, n0: 30, ..AdaptiveConfig::default() };
    let ds = run_adaptive(&m, &cfg).unwrap();
    let refined = ds.iterations.len() - 1;
    // Branch 0 starts lowest; if it ends above another branch, it crossed.
    let at_end = |label: usize| ds.branches[label].samples.last().map(|s| s.omega).unwrap_or(f64::NAN);
    let lowest_end = ds.branches.iter().map(|b| at_end(b.label)).fold(f64::INFINITY, f64::min);
    let crossed = at_end(0) > lowest_end;
    let max_eps = ds.max_epsilon();
    Outcome::new(
        refined == 0 && crossed && max_eps <= cfg.eps_bar && ds.branches.len() == 4,
        format!("{} points, {refined} refinement rounds, max epsilon {max_eps:.1e}, crossing tracked: {crossed}", ds.grid.len()),
    )
}
