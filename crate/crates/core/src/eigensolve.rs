//! Generalized Hermitian eigensolve `K(k) q = λ M q` at fixed wavenumber,
//! mode-window selection and degenerate-cluster detection.

use faer::{Mat, MatRef, Par, Side};
use num_complex::Complex64 as c64;

use crate::assembly::SafeMatrices;
use crate::error::{Error, Result};

/// Default relative eigenvalue gap below which two modes may be merged.
pub const DEFAULT_EPS_EIG: f64 = 1e-6;
/// Default coupling threshold relative to `‖K'‖`.
pub const DEFAULT_COUPLING_TOL: f64 = 1e-6;
/// Absolute floor in the relative-gap denominator, so near-zero rigid
/// branches are compared on an absolute scale.
pub const GAP_FLOOR: f64 = 1e-9;

/// Cholesky-reduced form of the family, shared by every solve.
///
/// With `M = L Lᵀ`, `A_i = L⁻¹ K_i L⁻ᵀ` and `H(k) = A1 + i k A2 + k² A3`
/// is Hermitian with the same eigenvalues as the pencil.
#[derive(Debug)]
pub(crate) struct Reduced {
    a1: Mat<f64>,
    a2: Mat<f64>,
    a3: Mat<f64>,
    /// `L⁻ᵀ`, stored complex for the back-transform product.
    linv_t: Mat<c64>,
    norm_a2: f64,
    norm_a3: f64,
}

impl Reduced {
    fn new(s: &SafeMatrices) -> Result<Self> {
        let n = s.n();
        let llt = s.m.to_dense().llt(Side::Lower).map_err(|_| Error::MassNotPositiveDefinite)?;
        let mut linv = Mat::<f64>::identity(n, n);
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(llt.L(), linv.as_mut(), Par::Seq);
        let whiten = |k: &crate::sparse::CsrMatrix| -> Mat<f64> {
            // L⁻¹ K L⁻ᵀ = L⁻¹ (L⁻¹ Kᵀ)ᵀ; K is (skew-)symmetric so one sparse product suffices.
            let kl = k.mul_dense(&linv.transpose().to_owned());
            &linv * &kl
        };
        let sym = |a: Mat<f64>, sign: f64| Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + sign * a[(j, i)]));
        let a1 = sym(whiten(&s.k1), 1.0);
        let a2 = sym(whiten(&s.k2), -1.0);
        let a3 = sym(whiten(&s.k3), 1.0);
        let linv_t = Mat::from_fn(n, n, |i, j| c64::new(linv[(j, i)], 0.0));
        let (norm_a2, norm_a3) = (a2.norm_l2(), a3.norm_l2());
        Ok(Self { a1, a2, a3, linv_t, norm_a2, norm_a3 })
    }

    fn hermitian_at(&self, k: f64) -> Mat<c64> {
        let n = self.a1.nrows();
        let k2 = k * k;
        Mat::from_fn(n, n, |i, j| c64::new(self.a1[(i, j)] + k2 * self.a3[(i, j)], k * self.a2[(i, j)]))
    }
}

impl SafeMatrices {
    pub(crate) fn reduced(&self) -> Result<&Reduced> {
        if let Some(r) = self.reduced.get() {
            return Ok(r);
        }
        let r = Reduced::new(self)?;
        let _ = self.reduced.set(r);
        Ok(self.reduced.get().expect("just initialised"))
    }

    /// Frobenius norm of `K'(k)` in the mass-whitened coordinates, the
    /// scale against which couplings between M-normalized modes are judged.
    pub fn kprime_norm(&self, k: f64) -> Result<f64> {
        let r = self.reduced()?;
        // A2 is real skew and A3 real symmetric, so the cross term is purely imaginary.
        Ok((r.norm_a2.powi(2) + 4.0 * k * k * r.norm_a3.powi(2)).sqrt())
    }

    /// `K'(k) Q` without forming the dense derivative.
    pub fn apply_kprime(&self, k: f64, q: &Mat<c64>) -> Mat<c64> {
        let a = self.k2.mul_dense(q);
        let b = self.k3.mul_dense(q);
        Mat::from_fn(q.nrows(), q.ncols(), |i, j| c64::new(0.0, 1.0) * a[(i, j)] + b[(i, j)] * (2.0 * k))
    }

    /// `K(k) Q` without forming the dense operator.
    pub fn apply_stiffness(&self, k: f64, q: &Mat<c64>) -> Mat<c64> {
        let a = self.k1.mul_dense(q);
        let b = self.k2.mul_dense(q);
        let c = self.k3.mul_dense(q);
        Mat::from_fn(q.nrows(), q.ncols(), |i, j| {
            a[(i, j)] + c64::new(0.0, k) * b[(i, j)] + c[(i, j)] * (k * k)
        })
    }
}

/// Which eigenpairs a solve keeps.
///
/// Modes with `ω ≤ omega_max · (1 + margin)` are retained; only those with
/// `ω ≤ omega_max` are "in the window" for error estimation and output. The
/// guard band lets a branch that leaves the window between two grid points
/// still find its continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeWindow {
    pub omega_max: f64,
    pub margin: f64,
}

impl ModeWindow {
    pub const DEFAULT_MARGIN: f64 = 0.1;

    pub fn new(omega_max: f64) -> Self {
        Self { omega_max, margin: Self::DEFAULT_MARGIN }
    }

    /// Keep the complete spectrum.
    pub fn all() -> Self {
        Self { omega_max: f64::INFINITY, margin: 0.0 }
    }

    pub fn cutoff(&self) -> f64 {
        self.omega_max * (1.0 + self.margin)
    }
}

/// All retained eigenpairs at one wavenumber.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub k: f64,
    /// Ascending `λ = ω²`.
    pub eigenvalues: Vec<f64>,
    /// n × m, M-orthonormal columns.
    pub vectors: Mat<c64>,
    /// Partition of `0..m` into tracking objects, each sorted, ordered by first index.
    pub clusters: Vec<Vec<usize>>,
    pub window: ModeWindow,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.eigenvalues[i].max(0.0).sqrt()
    }

    /// Mean frequency of a cluster's members.
    pub fn cluster_omega(&self, c: usize) -> f64 {
        let idx = &self.clusters[c];
        idx.iter().map(|&i| self.omega(i)).sum::<f64>() / idx.len() as f64
    }

    /// Whether a cluster lies inside the reporting window.
    pub fn cluster_in_window(&self, c: usize) -> bool {
        self.clusters[c].iter().any(|&i| self.omega(i) <= self.window.omega_max)
    }

    /// n × d basis of cluster `c`.
    pub fn cluster_basis(&self, c: usize) -> Mat<c64> {
        let idx = &self.clusters[c];
        Mat::from_fn(self.vectors.nrows(), idx.len(), |r, j| self.vectors[(r, idx[j])])
    }

    pub fn cluster_of(&self, i: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&i))
    }

    /// Makes every mode its own object.
    pub fn singletons(mut self) -> Self {
        self.clusters = (0..self.len()).map(|i| vec![i]).collect();
        self
    }
}

/// Solves at `k`, keeping the modes admitted by `window`. Vectors are
/// M-orthonormal and phase-fixed; every mode is initially a singleton.
pub fn solve_modes(m: &SafeMatrices, k: f64, window: ModeWindow) -> Result<ModeSet> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::Solver { k, message: "wavenumber must be finite and non-negative".into() });
    }
    let r = m.reduced()?;
    let h = r.hermitian_at(k);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver { k, message: format!("Hermitian eigensolver did not converge: {e:?}") })?;
    let s = evd.S().column_vector();
    let cutoff = window.cutoff();
    let n = h.nrows();
    let count = (0..n).take_while(|&i| s[i].re.max(0.0).sqrt() <= cutoff).count();
    let eigenvalues: Vec<f64> = (0..count).map(|i| s[i].re).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver { k, message: "non-finite eigenvalue".into() });
    }

    let mut u = evd.U().subcols(0, count).to_owned();
    orthonormalize(&mut u);
    let mut vectors = &r.linv_t * &u;
    fix_phase_columns(&mut vectors);
    let clusters = (0..count).map(|i| vec![i]).collect();
    Ok(ModeSet { k, eigenvalues, vectors, clusters, window })
}

/// Modified Gram–Schmidt on the columns, in the Euclidean inner product.
fn orthonormalize(u: &mut Mat<c64>) {
    for j in 0..u.ncols() {
        for i in 0..j {
            let mut dot = c64::new(0.0, 0.0);
            for r in 0..u.nrows() {
                dot += u[(r, i)].conj() * u[(r, j)];
            }
            for r in 0..u.nrows() {
                let v = u[(r, i)];
                u[(r, j)] -= dot * v;
            }
        }
        let norm = (0..u.nrows()).map(|r| u[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..u.nrows() {
            u[(r, j)] /= norm;
        }
    }
}

/// Rotates each vector by a unit scalar so that its largest-modulus entry is
/// real and positive. Entries within a relative 1e-8 of the maximum count as
/// tied and the lowest index wins, so rounding noise cannot move the anchor.
pub fn fix_phase(mut set: ModeSet) -> ModeSet {
    fix_phase_columns(&mut set.vectors);
    set
}

pub(crate) fn fix_phase_columns(q: &mut Mat<c64>) {
    for j in 0..q.ncols() {
        let max = (0..q.nrows()).map(|r| q[(r, j)].norm()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let anchor = (0..q.nrows()).find(|&r| q[(r, j)].norm() >= max * (1.0 - 1e-8)).unwrap();
        let z = q[(anchor, j)];
        let rot = z.conj() / z.norm();
        for r in 0..q.nrows() {
            q[(r, j)] *= rot;
        }
        q[(anchor, j)] = c64::new(q[(anchor, j)].re, 0.0);
    }
}

/// Relative gap `|λi − λj| / max(|λi|, |λj|, GAP_FLOOR)`.
pub fn relative_gap(li: f64, lj: f64) -> f64 {
    (li - lj).abs() / li.abs().max(lj.abs()).max(GAP_FLOOR)
}

/// Groups modes into degenerate clusters: `i` and `j` merge when their
/// relative gap is below `eps_eig` and their coupling `|q_iᴴ K' q_j|` is
/// below `coupling_tol · ‖K'‖` (symmetry protection). Clusters are the
/// transitive closure of the pairwise merges.
pub fn cluster_degenerate(
    m: &SafeMatrices,
    mut set: ModeSet,
    eps_eig: f64,
    coupling_tol: f64,
) -> Result<ModeSet> {
    let n_modes = set.len();
    let mut parent: Vec<usize> = (0..n_modes).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }

    let candidates: Vec<(usize, usize)> = (0..n_modes)
        .flat_map(|i| {
            let ev = &set.eigenvalues;
            ((i + 1)..n_modes)
                .take_while(move |&j| relative_gap(ev[i], ev[j]) < eps_eig)
                .map(move |j| (i, j))
        })
        .collect();
    if !candidates.is_empty() {
        let kq = m.apply_kprime(set.k, &set.vectors);
        let scale = m.kprime_norm(set.k)?;
        let v = &set.vectors;
        for (i, j) in candidates {
            let mut g = c64::new(0.0, 0.0);
            for r in 0..v.nrows() {
                g += v[(r, i)].conj() * kq[(r, j)];
            }
            if g.norm() < coupling_tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n_modes];
    for i in 0..n_modes {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(i);
    }
    set.clusters = clusters;
    Ok(set)
}

/// `Qᴴ M Q − I` in max norm; a cheap orthonormality diagnostic.
pub fn orthonormality_error(m: &SafeMatrices, q: MatRef<'_, c64>) -> f64 {
    let mq = m.m.mul_dense(&q.to_owned());
    let g = q.adjoint() * &mq;
    let mut err = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    err
}

/// Largest `‖K(k) q_i − λ_i M q_i‖ / ‖K(k)‖_F` over the set.
pub fn max_relative_residual(m: &SafeMatrices, set: &ModeSet) -> f64 {
    let kq = m.apply_stiffness(set.k, &set.vectors);
    let mq = m.m.mul_dense(&set.vectors);
    let k_norm = m.stiffness_at(set.k).norm_l2();
    let mut worst = 0.0_f64;
    for j in 0..set.len() {
        let r = (0..kq.nrows())
            .map(|i| (kq[(i, j)] - mq[(i, j)] * set.eigenvalues[j]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / k_norm);
    }
    worst
}
