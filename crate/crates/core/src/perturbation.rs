//! Eigenvector derivatives, the two-state veering model and the local step
//! bound that guarantees correct MAC tracking.

use faer::Mat;
use num_complex::Complex64 as c64;

use crate::assembly::SafeMatrices;
use crate::eigensolve::{relative_gap, ModeSet, DEFAULT_EPS_EIG};
use crate::error::{Error, Result};

/// `G = Qᴴ K' Q` for a mode set: `G[(j, i)] = q_jᴴ K' q_i`.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub g: Mat<c64>,
}

impl CouplingTable {
    /// From a dense `K'` (e.g. [`SafeMatrices::stiffness_derivative_at`]).
    pub fn new(set: &ModeSet, kprime: &Mat<c64>) -> Result<Self> {
        if kprime.nrows() != set.vectors.nrows() || kprime.ncols() != set.vectors.nrows() {
            return Err(Error::Structural("K' dimension does not match the mode vectors".into()));
        }
        let kq = kprime * &set.vectors;
        Ok(Self { g: set.vectors.adjoint() * &kq })
    }

    /// From the sparse family without forming `K'` densely.
    pub fn from_family(m: &SafeMatrices, set: &ModeSet) -> Self {
        let kq = m.apply_kprime(set.k, &set.vectors);
        Self { g: set.vectors.adjoint() * &kq }
    }

    /// `q_jᴴ K' q_i`.
    pub fn coupling(&self, i: usize, j: usize) -> c64 {
        self.g[(j, i)]
    }
}

/// `q_jᴴ K' q_i`.
pub fn coupling(set: &ModeSet, i: usize, j: usize, kprime: &Mat<c64>) -> Result<c64> {
    if i == j {
        return Err(Error::Contract("coupling needs two distinct modes".into()));
    }
    let n = set.vectors.nrows();
    let mut acc = c64::new(0.0, 0.0);
    for r in 0..n {
        let mut kq = c64::new(0.0, 0.0);
        for c in 0..n {
            kq += kprime[(r, c)] * set.vectors[(c, i)];
        }
        acc += set.vectors[(r, j)].conj() * kq;
    }
    Ok(acc)
}

fn ensure_nondegenerate(set: &ModeSet, i: usize) -> Result<()> {
    if i >= set.len() {
        return Err(Error::Contract(format!("mode {i} is not in the set ({} modes)", set.len())));
    }
    let in_cluster = set.cluster_of(i).is_some_and(|c| set.clusters[c].len() > 1);
    let close = (0..set.len()).any(|j| j != i && relative_gap(set.eigenvalues[i], set.eigenvalues[j]) < DEFAULT_EPS_EIG);
    if in_cluster || close {
        return Err(Error::DegenerateMode { index: i });
    }
    Ok(())
}

/// `q_i' = Σ_{j≠i} (q_jᴴ K' q_i) / (λ_i − λ_j) q_j`, truncated to the
/// retained modes. Satisfies `q_iᴴ M q_i' = 0` by construction.
pub fn eigvec_derivative_from(set: &ModeSet, table: &CouplingTable, i: usize) -> Result<Vec<c64>> {
    ensure_nondegenerate(set, i)?;
    let n = set.vectors.nrows();
    let mut out = vec![c64::new(0.0, 0.0); n];
    for j in (0..set.len()).filter(|&j| j != i) {
        let w = table.coupling(i, j) / (set.eigenvalues[i] - set.eigenvalues[j]);
        for (r, o) in out.iter_mut().enumerate() {
            *o += w * set.vectors[(r, j)];
        }
    }
    Ok(out)
}

pub fn eigvec_derivative(set: &ModeSet, i: usize, kprime: &Mat<c64>) -> Result<Vec<c64>> {
    eigvec_derivative_from(set, &CouplingTable::new(set, kprime)?, i)
}

/// `‖q_i'‖_M = √(Σ_{j≠i} |q_jᴴ K' q_i|² / (λ_i − λ_j)²)`.
pub fn derivative_norm_from(set: &ModeSet, table: &CouplingTable, i: usize) -> Result<f64> {
    ensure_nondegenerate(set, i)?;
    Ok((0..set.len())
        .filter(|&j| j != i)
        .map(|j| table.coupling(i, j).norm_sqr() / (set.eigenvalues[i] - set.eigenvalues[j]).powi(2))
        .sum::<f64>()
        .sqrt())
}

pub fn derivative_norm(set: &ModeSet, i: usize, kprime: &Mat<c64>) -> Result<f64> {
    derivative_norm_from(set, &CouplingTable::new(set, kprime)?, i)
}

/// `c_ij = q_iᴴ K' q_j / (λ_j − λ_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoefficient {
    pub i: usize,
    pub j: usize,
    pub value: c64,
}

pub fn coupling_coefficient(set: &ModeSet, table: &CouplingTable, i: usize, j: usize) -> Result<CouplingCoefficient> {
    if i == j || relative_gap(set.eigenvalues[i], set.eigenvalues[j]) < DEFAULT_EPS_EIG {
        return Err(Error::DegenerateMode { index: i });
    }
    let value = table.coupling(j, i) / (set.eigenvalues[j] - set.eigenvalues[i]);
    Ok(CouplingCoefficient { i, j, value })
}

/// The mode `j ≠ i` with the largest `|c_ij|`, if any.
pub fn strongest_coupling(set: &ModeSet, table: &CouplingTable, i: usize) -> Result<Option<CouplingCoefficient>> {
    ensure_nondegenerate(set, i)?;
    let mut best: Option<CouplingCoefficient> = None;
    for j in (0..set.len()).filter(|&j| j != i) {
        let c = coupling_coefficient(set, table, i, j)?;
        if best.is_none_or(|b| c.value.norm() > b.value.norm()) {
            best = Some(c);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBoundEstimate {
    pub k: f64,
    pub mode: usize,
    pub c1: f64,
    pub c2: f64,
    pub delta0: f64,
    pub delta_k_max: f64,
}

/// `Δk_max = min(δ0, 1/√(C1 + C2))` with `C1 = 2‖q_i'‖²` and
/// `C2 = 2 max_{j≠i} |c_ij|²`.
pub fn estimate_step_bound_from(
    set: &ModeSet,
    table: &CouplingTable,
    i: usize,
    delta0: f64,
) -> Result<StepBoundEstimate> {
    if !(delta0 > 0.0) {
        return Err(Error::Contract(format!("delta0 must be positive, got {delta0}")));
    }
    let norm = derivative_norm_from(set, table, i)?;
    let cmax = strongest_coupling(set, table, i)?.map_or(0.0, |c| c.value.norm());
    let (c1, c2) = (2.0 * norm * norm, 2.0 * cmax * cmax);
    let bound = if c1 + c2 > 0.0 { 1.0 / (c1 + c2).sqrt() } else { f64::INFINITY };
    Ok(StepBoundEstimate { k: set.k, mode: i, c1, c2, delta0, delta_k_max: delta0.min(bound) })
}

pub fn estimate_step_bound(set: &ModeSet, i: usize, kprime: &Mat<c64>, delta0: f64) -> Result<StepBoundEstimate> {
    estimate_step_bound_from(set, &CouplingTable::new(set, kprime)?, i, delta0)
}

/// Effective 2×2 Hermitian model of two modes frozen at `k0`:
/// `a(k) = q_iᴴ K(k) q_i`, `c(k) = q_jᴴ K(k) q_j`, `b(k) = q_iᴴ K(k) q_j`,
/// each a quadratic polynomial in `k` stored as `[p0, p1, p2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateModel {
    pub a: [f64; 3],
    pub c: [f64; 3],
    pub b: [c64; 3],
    pub i: usize,
    pub j: usize,
    pub k0: f64,
}

impl TwoStateModel {
    /// Builds the model from explicit coefficients (synthetic families).
    pub fn from_coefficients(a: [f64; 3], c: [f64; 3], b: [c64; 3]) -> Self {
        Self { a, c, b, i: 0, j: 1, k0: 0.0 }
    }

    pub fn from_modes(m: &SafeMatrices, set: &ModeSet, i: usize, j: usize) -> Result<Self> {
        if i >= set.len() || j >= set.len() || i == j {
            return Err(Error::Contract(format!("invalid mode pair ({i}, {j})")));
        }
        let cols = Mat::from_fn(set.vectors.nrows(), 2, |r, c| set.vectors[(r, if c == 0 { i } else { j })]);
        let proj = |k: &crate::sparse::CsrMatrix| -> Mat<c64> { cols.adjoint() * k.mul_dense(&cols) };
        let (p1, p2, p3) = (proj(&m.k1), proj(&m.k2), proj(&m.k3));
        let iu = c64::new(0.0, 1.0);
        // The k-linear term is i·K2; its diagonal projections are real because K2 is skew.
        Ok(Self {
            a: [p1[(0, 0)].re, (iu * p2[(0, 0)]).re, p3[(0, 0)].re],
            c: [p1[(1, 1)].re, (iu * p2[(1, 1)]).re, p3[(1, 1)].re],
            b: [p1[(0, 1)], iu * p2[(0, 1)], p3[(0, 1)]],
            i,
            j,
            k0: set.k,
        })
    }

    pub fn a_at(&self, k: f64) -> f64 {
        self.a[0] + k * self.a[1] + k * k * self.a[2]
    }

    pub fn c_at(&self, k: f64) -> f64 {
        self.c[0] + k * self.c[1] + k * k * self.c[2]
    }

    pub fn b_at(&self, k: f64) -> c64 {
        self.b[0] + self.b[1] * k + self.b[2] * (k * k)
    }
}

/// `λ± = (a + c)/2 ± ½ √((a − c)² + 4|b|²)`, returned as `(λ−, λ+)`.
pub fn two_state_eigenvalues(model: &TwoStateModel, k: f64) -> (f64, f64) {
    let (a, c, b) = (model.a_at(k), model.c_at(k), model.b_at(k));
    let mean = 0.5 * (a + c);
    let half = 0.5 * ((a - c).powi(2) + 4.0 * b.norm_sqr()).sqrt();
    (mean - half, mean + half)
}
