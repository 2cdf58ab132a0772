//! Numerical self-checks of the perturbation formulas against finite
//! differences of the solver itself.
//!
//! All checks solve the complete spectrum, so the derivative expansion is not
//! truncated and agreement with finite differences is expected to round-off.

use faer::Mat;
use num_complex::Complex64 as c64;

use crate::assembly::SafeMatrices;
use crate::eigensolve::{cluster_degenerate, solve_modes, ModeSet, ModeWindow};
use crate::error::{Error, Result};
use crate::perturbation::{derivative_norm_from, eigvec_derivative_from, CouplingTable};

/// Central-difference step for eigenvector and eigenvalue derivatives.
pub const FD_STEP: f64 = 1e-5;
/// Offsets used for the MAC Taylor fits.
pub const TAYLOR_STEPS: [f64; 5] = [1e-4, 2e-4, 4e-4, 7e-4, 1e-3];
/// Cross fits below this |c_ij| are skipped: the MAC signal sinks into the cubic remainder.
pub const CROSS_FIT_FLOOR: f64 = 1e-2;
/// Derivative norm below which a mode counts as stationary: its shape does
/// not depend on k (shear-horizontal modes of an isotropic plate have
/// `q' = 0` exactly). A relative error is meaningless there, so stationary
/// modes are judged by absolute error on the unit scale of `‖q‖_M = 1`.
pub const STATIONARY_FLOOR: f64 = 1e-3;

fn error_scale(magnitude: f64, floor: f64) -> f64 {
    if magnitude < floor {
        1.0
    } else {
        magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub derivative: f64,
    pub taylor: f64,
    pub hellmann_feynman: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { derivative: 1e-5, taylor: 0.05, hellmann_feynman: 1e-6 }
    }
}

/// A slope fitted through the origin, compared with its predicted value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorFit {
    pub predicted: f64,
    pub fitted: f64,
}

impl TaylorFit {
    /// Relative to the prediction; absolute for stationary predictions.
    pub fn relative_error(&self) -> f64 {
        (self.fitted - self.predicted).abs() / error_scale(self.predicted.abs(), STATIONARY_FLOOR * STATIONARY_FLOOR)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeChecks {
    /// `‖q' − FD‖_M / ‖q'‖_M`, or absolute for a stationary mode.
    pub derivative_error: f64,
    /// `1 − MAC_ii(Δk)` against `Δk² ‖q'‖²`.
    pub self_fit: TaylorFit,
    /// `MAC_ij(Δk)` against `Δk² |c_ij|²` for the most strongly coupled partner.
    pub cross_fit: Option<(usize, TaylorFit)>,
    /// `|λ'_FD − q_iᴴK'q_i| / max(|q_iᴴK'q_i|, 1)`.
    pub hellmann_feynman_error: f64,
}

impl ModeChecks {
    pub fn passes(&self, tol: &Tolerances) -> bool {
        self.derivative_error <= tol.derivative
            && self.self_fit.relative_error() <= tol.taylor
            && self.cross_fit.is_none_or(|(_, f)| f.relative_error() <= tol.taylor)
            && self.hellmann_feynman_error <= tol.hellmann_feynman
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeOutcome {
    /// Mode belongs to a degenerate cluster; the expansion does not apply.
    Degenerate,
    Checked(ModeChecks),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub k: f64,
    pub mode: usize,
    pub omega: f64,
    pub outcome: ModeOutcome,
}

fn m_apply(m: &SafeMatrices, v: &[c64]) -> Vec<c64> {
    let col = Mat::from_fn(v.len(), 1, |i, _| v[i]);
    let r = m.m.mul_dense(&col);
    (0..v.len()).map(|i| r[(i, 0)]).collect()
}

fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `‖v‖_M`.
pub fn m_norm(m: &SafeMatrices, v: &[c64]) -> f64 {
    inner(v, &m_apply(m, v)).re.max(0.0).sqrt()
}

fn column(q: &Mat<c64>, j: usize) -> Vec<c64> {
    (0..q.nrows()).map(|r| q[(r, j)]).collect()
}

fn complete(m: &SafeMatrices, k: f64) -> Result<ModeSet> {
    let set = solve_modes(m, k, ModeWindow::all())?;
    if set.len() != m.n() {
        return Err(Error::Solver { k, message: format!("expected {} modes, got {}", m.n(), set.len()) });
    }
    Ok(set)
}

/// Central difference of mode `i`, with each neighbour rotated so that
/// `q_iᴴ(k) M q_i(k ± h)` is real positive and the residual self-projection
/// removed.
pub fn fd_derivative(m: &SafeMatrices, set: &ModeSet, i: usize, h: f64) -> Result<Vec<c64>> {
    let qi = column(&set.vectors, i);
    let mqi = m_apply(m, &qi);
    let mut shifted = Vec::with_capacity(2);
    for kk in [set.k + h, set.k - h] {
        let s = complete(m, kk)?;
        let mut q = column(&s.vectors, i);
        let p = inner(&q, &mqi).conj();
        if p.norm() < 0.5 {
            return Err(Error::Contract(format!("mode {i} changed identity within ±{h} of k = {}", set.k)));
        }
        let rot = p.conj() / p.norm();
        q.iter_mut().for_each(|x| *x *= rot);
        shifted.push(q);
    }
    let mut d: Vec<c64> = shifted[0].iter().zip(&shifted[1]).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let self_proj = inner(&mqi, &d);
    d.iter_mut().zip(&qi).for_each(|(x, q)| *x -= self_proj * q);
    Ok(d)
}

fn slope_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    sxy / sxx
}

fn degenerate(set: &ModeSet, i: usize) -> bool {
    set.cluster_of(i).is_some_and(|c| set.clusters[c].len() > 1)
}

/// Runs every check at one wavenumber for the modes with `ω ≤ report.omega_max`.
pub fn verify_at(
    m: &SafeMatrices,
    k: f64,
    report: ModeWindow,
    eps_eig: f64,
    coupling_tol: f64,
) -> Result<Vec<ModeReport>> {
    let set = cluster_degenerate(m, complete(m, k)?, eps_eig, coupling_tol)?;
    let table = CouplingTable::from_family(m, &set);
    let shifted: Vec<ModeSet> = TAYLOR_STEPS.iter().map(|dk| complete(m, k + dk)).collect::<Result<_>>()?;
    let plus = complete(m, k + FD_STEP)?;
    let minus = complete(m, k - FD_STEP)?;
    let xs: Vec<f64> = TAYLOR_STEPS.iter().map(|dk| dk * dk).collect();
    let mq = m.m.mul_dense(&set.vectors);
    // Overlaps with the shifted solves: O[s][(i, j)] = q_i(k)ᴴ M q_j(k + Δk_s).
    let overlaps: Vec<Mat<c64>> = shifted.iter().map(|s| mq.adjoint() * &s.vectors).collect();

    let mut out = Vec::new();
    for i in (0..set.len()).filter(|&i| set.omega(i) <= report.omega_max) {
        let outcome = if degenerate(&set, i) {
            ModeOutcome::Degenerate
        } else {
            match check_mode(m, &set, &table, i, &plus, &minus, &overlaps, &xs) {
                Ok(c) => ModeOutcome::Checked(c),
                Err(Error::DegenerateMode { .. }) => ModeOutcome::Degenerate,
                Err(e) => return Err(e),
            }
        };
        out.push(ModeReport { k, mode: i, omega: set.omega(i), outcome });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn check_mode(
    m: &SafeMatrices,
    set: &ModeSet,
    table: &CouplingTable,
    i: usize,
    plus: &ModeSet,
    minus: &ModeSet,
    overlaps: &[Mat<c64>],
    xs: &[f64],
) -> Result<ModeChecks> {
    let dq = eigvec_derivative_from(set, table, i)?;
    let norm = derivative_norm_from(set, table, i)?;
    let fd = fd_derivative(m, set, i, FD_STEP)?;
    let diff: Vec<c64> = dq.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let derivative_error = m_norm(m, &diff) / error_scale(m_norm(m, &dq), STATIONARY_FLOOR);

    let ys: Vec<f64> = overlaps.iter().map(|o| 1.0 - o[(i, i)].norm_sqr()).collect();
    let self_fit = TaylorFit { predicted: norm * norm, fitted: slope_through_origin(xs, &ys) };

    let partner = (0..set.len())
        .filter(|&j| j != i && !degenerate(set, j))
        .map(|j| (j, table.coupling(j, i).norm() / (set.eigenvalues[j] - set.eigenvalues[i]).abs()))
        .filter(|(_, c)| c.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let cross_fit = partner.filter(|(_, c)| *c >= CROSS_FIT_FLOOR).map(|(j, c)| {
        let ys: Vec<f64> = overlaps.iter().map(|o| o[(i, j)].norm_sqr()).collect();
        (j, TaylorFit { predicted: c * c, fitted: slope_through_origin(xs, &ys) })
    });

    let hf = table.coupling(i, i).re;
    let fd_slope = (plus.eigenvalues[i] - minus.eigenvalues[i]) / (2.0 * FD_STEP);
    let hellmann_feynman_error = (fd_slope - hf).abs() / hf.abs().max(1.0);

    Ok(ModeChecks { derivative_error, self_fit, cross_fit, hellmann_feynman_error })
}
