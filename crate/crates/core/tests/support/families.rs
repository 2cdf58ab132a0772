//! Synthetic families with closed-form spectra, and the aluminium plate.

use disperkit::assembly::{assemble, Scales};
use disperkit::eigensolve::{solve_modes, ModeWindow};
use disperkit::hungarian::Assignment;
use disperkit::mesh::build_plate_mesh;
use disperkit::perturbation::estimate_step_bound;
use disperkit::tracking::{mac_separation, object_mac_matrix};
use disperkit::{Layup, Material, SafeMatrices};
use faer::Mat;

/// Two-state veering: `a(k) = α + s1 k²`, `c(k) = γ + s2 k²`, constant
/// coupling `β`, optionally padded with stiff decoupled DOFs.
#[derive(Debug, Clone, Copy)]
pub struct Veering {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub s1: f64,
    pub s2: f64,
    pub padding: usize,
}

impl Veering {
    /// Centre at `k = 1` with width `w` (gap `2|β|` over `|d(a − c)/dk|`).
    pub fn centred(width: f64, padding: usize) -> Self {
        // s1 − s2 = 1 and α − γ = −1 put the diabatic crossing at k = 1,
        // where |d(a − c)/dk| = 2, so the width is |β|.
        Self { alpha: 1.0, gamma: 2.0, beta: width, s1: 2.0, s2: 1.0, padding }
    }

    pub fn centre(&self) -> f64 {
        ((self.gamma - self.alpha) / (self.s1 - self.s2)).sqrt()
    }

    pub fn width(&self) -> f64 {
        let kc = self.centre();
        2.0 * self.beta.abs() / (2.0 * (self.s1 - self.s2).abs() * kc)
    }

    pub fn family(&self) -> SafeMatrices {
        let n = 2 + self.padding;
        let k1 = Mat::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => self.alpha,
            (1, 1) => self.gamma,
            (0, 1) | (1, 0) => self.beta,
            (i, j) if i == j => 20.0 + 5.0 * i as f64,
            _ => 0.0,
        });
        let k3 = Mat::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => self.s1,
            (1, 1) => self.s2,
            (i, j) if i == j => 3.0,
            _ => 0.0,
        });
        SafeMatrices::from_dense(&k1, &Mat::zeros(n, n), &k3, &Mat::identity(n, n)).expect("veering family")
    }

    /// Closed-form `(λ−, λ+)` of the coupled pair.
    pub fn pair_eigenvalues(&self, k: f64) -> (f64, f64) {
        let a = self.alpha + self.s1 * k * k;
        let c = self.gamma + self.s2 * k * k;
        let r = 0.5 * ((a - c).powi(2) + 4.0 * self.beta * self.beta).sqrt();
        (0.5 * (a + c) - r, 0.5 * (a + c) + r)
    }
}

/// Two decoupled 2×2 blocks. Within a block the `k²` term is a multiple of
/// the identity, so the block eigenvectors are constant; across blocks the
/// lowest pair crosses near `k ≈ 1.1` and the upper pair near `k ≈ 1.9`.
pub fn block_crossing() -> SafeMatrices {
    let blocks = [([[1.0, 0.3], [0.3, 6.0]], 2.0), ([[2.0, 0.2], [0.2, 9.0]], 1.2)];
    let n = 4;
    let k1 = Mat::from_fn(n, n, |i, j| if i / 2 == j / 2 { blocks[i / 2].0[i % 2][j % 2] } else { 0.0 });
    let k3 = Mat::from_fn(n, n, |i, j| if i == j { blocks[i / 2].1 } else { 0.0 });
    SafeMatrices::from_dense(&k1, &Mat::zeros(n, n), &k3, &Mat::identity(n, n)).expect("block family")
}

/// Aluminium: E = 70 GPa, ν = 0.33, ρ = 2700 kg/m³, c_T = 3040 m/s.
pub const ALUMINIUM: (f64, f64, f64, f64) = (70e9, 0.33, 2700.0, 3040.0);

/// Free aluminium plate, half-thickness `a = 1 mm`, `plies` GLL elements of `order`.
pub fn aluminium_plate(plies: usize, order: usize) -> SafeMatrices {
    let (e, nu, rho, c_t) = ALUMINIUM;
    let mat = Material::isotropic(e, nu, rho).unwrap();
    let a = 1e-3;
    let layup = Layup::from_sequence(mat, &vec![0.0; plies], 1, false, 2.0 * a / plies as f64).unwrap();
    let mesh = build_plate_mesh(&layup, order, a).unwrap();
    assemble(&mesh, Scales { a, c_t }).unwrap()
}

/// Smallest step bound over the modes of the coupled pair at `k`.
pub fn pair_step_bound(m: &SafeMatrices, k: f64, delta0: f64) -> f64 {
    let set = solve_modes(m, k, ModeWindow::all()).unwrap();
    let kp = m.stiffness_derivative_at(k);
    (0..2).map(|i| estimate_step_bound(&set, i, &kp, delta0).unwrap().delta_k_max).fold(f64::INFINITY, f64::min)
}

/// MAC separations of the true (eigenvalue-ordered) correspondence between
/// two complete solves: identity pairing, not the optimal one.
pub fn ordered_separations(m: &SafeMatrices, k_left: f64, k_right: f64) -> Vec<f64> {
    let left = solve_modes(m, k_left, ModeWindow::all()).unwrap();
    let right = solve_modes(m, k_right, ModeWindow::all()).unwrap();
    let mac = object_mac_matrix(&left, &right, &m.m).unwrap();
    let identity = Assignment { row_to_col: (0..left.len()).map(Some).collect(), total_cost: 0.0 };
    mac_separation(&mac, &identity).into_iter().map(|d| d.unwrap()).collect()
}

/// Walks `[k0, k1]` with `Δk = step_bound / 2`, returning the smallest
/// separation of the coupled pair and the number of steps.
pub fn walk_half_bound(m: &SafeMatrices, k0: f64, k1: f64, delta0: f64) -> (f64, usize) {
    let mut k = k0;
    let mut min_d = f64::INFINITY;
    let mut steps = 0;
    while k < k1 {
        let next = (k + 0.5 * pair_step_bound(m, k, delta0)).min(k1);
        let d = ordered_separations(m, k, next);
        min_d = min_d.min(d[0]).min(d[1]);
        k = next;
        steps += 1;
    }
    (min_d, steps)
}

/// Rotates a nodal field of an annulus mesh by one element about the axis.
/// Node numbering follows `build_annulus_mesh`: angular index outer, radial inner.
pub fn rotate_annulus_field(q: &Mat<num_complex::Complex64>, n_circ: usize, n_rad: usize) -> Mat<num_complex::Complex64> {
    let n_r = 2 * n_rad + 1;
    let n_theta = 2 * n_circ;
    let (s, c) = (2.0 * std::f64::consts::PI / n_circ as f64).sin_cos();
    let mut out = Mat::zeros(q.nrows(), q.ncols());
    for t in 0..n_theta {
        for r in 0..n_r {
            let from = t * n_r + r;
            let to = ((t + 2) % n_theta) * n_r + r;
            for j in 0..q.ncols() {
                let (ux, uy, uz) = (q[(3 * from, j)], q[(3 * from + 1, j)], q[(3 * from + 2, j)]);
                out[(3 * to, j)] = ux;
                out[(3 * to + 1, j)] = uy * c - uz * s;
                out[(3 * to + 2, j)] = uy * s + uz * c;
            }
        }
    }
    out
}
