//! MAC-based comparison of mode sets at neighbouring wavenumbers.

use faer::Mat;
use num_complex::Complex64 as c64;

use crate::eigensolve::ModeSet;
use crate::error::{Error, Result};
use crate::hungarian::{hungarian, Assignment};
use crate::sparse::CsrMatrix;

/// Allowed deviation from unit M-norm / M-orthonormality on inputs.
const NORMALIZATION_TOL: f64 = 1e-6;

fn m_inner(a: &[c64], mb: &[c64]) -> c64 {
    a.iter().zip(mb).map(|(x, y)| x.conj() * y).sum()
}

fn apply(m: &CsrMatrix, q: &[c64]) -> Vec<c64> {
    let col = Mat::from_fn(q.len(), 1, |i, _| q[i]);
    let r = m.mul_dense(&col);
    (0..q.len()).map(|i| r[(i, 0)]).collect()
}

/// `|q_aᴴ M q_b|²` for M-normalized vectors.
pub fn mac(q_a: &[c64], q_b: &[c64], m: &CsrMatrix) -> Result<f64> {
    if q_a.len() != m.nrows() || q_b.len() != m.nrows() {
        return Err(Error::Structural(format!(
            "vector lengths {} and {} do not match the {}-DOF mass matrix",
            q_a.len(),
            q_b.len(),
            m.nrows()
        )));
    }
    let (ma, mb) = (apply(m, q_a), apply(m, q_b));
    for (name, q, mq) in [("q_a", q_a, &ma), ("q_b", q_b, &mb)] {
        let norm = m_inner(q, mq).re.sqrt();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Contract(format!("{name} has M-norm {norm}, expected 1")));
        }
    }
    Ok(m_inner(q_a, &mb).norm_sqr())
}

/// `‖Q_aᴴ M Q_b‖_F² / max(d_a, d_b)` for M-orthonormal bases.
pub fn subspace_mac(q_a: &Mat<c64>, q_b: &Mat<c64>, m: &CsrMatrix) -> Result<f64> {
    if q_a.nrows() != m.nrows() || q_b.nrows() != m.nrows() {
        return Err(Error::Structural("basis row count does not match the mass matrix".into()));
    }
    if q_a.ncols() == 0 || q_b.ncols() == 0 {
        return Err(Error::Contract("subspace basis is empty".into()));
    }
    let (ma, mb) = (m.mul_dense(q_a), m.mul_dense(q_b));
    for (name, q, mq) in [("Q_a", q_a, &ma), ("Q_b", q_b, &mb)] {
        let g = q.adjoint() * mq;
        let dev = gram_deviation(&g);
        if dev > NORMALIZATION_TOL {
            return Err(Error::Contract(format!("{name} is not M-orthonormal (deviation {dev:e})")));
        }
    }
    let g = q_a.adjoint() * &mb;
    let fro2: f64 = (0..g.nrows()).flat_map(|i| (0..g.ncols()).map(move |j| (i, j))).map(|(i, j)| g[(i, j)].norm_sqr()).sum();
    Ok(fro2 / q_a.ncols().max(q_b.ncols()) as f64)
}

fn gram_deviation(g: &Mat<c64>) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let t = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - c64::new(t, 0.0)).norm());
        }
    }
    dev
}

fn check_compatible(left: &ModeSet, right: &ModeSet, m: &CsrMatrix) -> Result<()> {
    if left.vectors.nrows() != m.nrows() || right.vectors.nrows() != m.nrows() {
        return Err(Error::Structural(format!(
            "mode sets have {} and {} DOFs but the mass matrix has {}",
            left.vectors.nrows(),
            right.vectors.nrows(),
            m.nrows()
        )));
    }
    Ok(())
}

/// Object-level MAC matrix between the clusters of two sets: subspace MAC
/// for every pair (equal to the plain MAC for two singletons).
pub fn object_mac_matrix(left: &ModeSet, right: &ModeSet, m: &CsrMatrix) -> Result<Mat<f64>> {
    check_compatible(left, right, m)?;
    let mq = m.mul_dense(&right.vectors);
    let g = left.vectors.adjoint() * &mq;
    Ok(Mat::from_fn(left.clusters.len(), right.clusters.len(), |a, b| {
        let (ca, cb) = (&left.clusters[a], &right.clusters[b]);
        let s: f64 = ca.iter().flat_map(|&i| cb.iter().map(move |&j| (i, j))).map(|(i, j)| g[(i, j)].norm_sqr()).sum();
        s / ca.len().max(cb.len()) as f64
    }))
}

/// `C = 1 − MAC` between the tracking objects of two sets.
pub fn cost_matrix(left: &ModeSet, right: &ModeSet, m: &CsrMatrix) -> Result<Mat<f64>> {
    let mac = object_mac_matrix(left, right, m)?;
    Ok(Mat::from_fn(mac.nrows(), mac.ncols(), |i, j| 1.0 - mac[(i, j)]))
}

/// MAC separation of every matched object: self-MAC minus the best competing
/// MAC along its row and its column, whichever margin is smaller. Unmatched
/// objects still compete; a maximum over no competitors is 0.
pub fn mac_separation(mac: &Mat<f64>, assignment: &Assignment) -> Vec<Option<f64>> {
    assignment
        .row_to_col
        .iter()
        .enumerate()
        .map(|(l, r)| {
            let r = (*r)?;
            let own = mac[(l, r)];
            let row_best = (0..mac.ncols()).filter(|&j| j != r).map(|j| mac[(l, j)]).fold(0.0, f64::max);
            let col_best = (0..mac.nrows()).filter(|&i| i != l).map(|i| mac[(i, r)]).fold(0.0, f64::max);
            Some((own - row_best).min(own - col_best))
        })
        .collect()
}

/// `ε = 1 − min D`.
pub fn error_indicator(ds: &[f64]) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Contract("error indicator needs at least one separation".into()));
    }
    Ok(1.0 - ds.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Everything learned from comparing two neighbouring mode sets.
#[derive(Debug, Clone)]
pub struct IntervalMatch {
    pub k_left: f64,
    pub k_right: f64,
    pub assignment: Assignment,
    /// Object-level MAC, left objects × right objects.
    pub mac: Mat<f64>,
    /// `D` per left object; `None` when unmatched.
    pub separations: Vec<Option<f64>>,
    /// Left objects whose separation enters `epsilon` (matched, and inside
    /// the reporting window at either end).
    pub scored: Vec<bool>,
    pub epsilon: f64,
    /// Cost of pairing objects in index order, for comparison with the optimum.
    pub ordered_cost: f64,
}

impl IntervalMatch {
    pub fn min_separation(&self) -> Option<f64> {
        self.separations
            .iter()
            .zip(&self.scored)
            .filter_map(|(d, &s)| if s { *d } else { None })
            .reduce(f64::min)
    }
}

/// Cost matrix → optimal assignment → separations → error indicator.
pub fn match_interval(left: &ModeSet, right: &ModeSet, m: &CsrMatrix) -> Result<IntervalMatch> {
    let mac = object_mac_matrix(left, right, m)?;
    let cost = Mat::from_fn(mac.nrows(), mac.ncols(), |i, j| 1.0 - mac[(i, j)]);
    let assignment = hungarian(&cost);
    let separations = mac_separation(&mac, &assignment);
    let scored: Vec<bool> = assignment
        .row_to_col
        .iter()
        .enumerate()
        .map(|(l, r)| r.is_some_and(|r| left.cluster_in_window(l) || right.cluster_in_window(r)))
        .collect();
    let ds: Vec<f64> = separations.iter().zip(&scored).filter_map(|(d, &s)| if s { *d } else { None }).collect();
    // An empty window has nothing to mistrack.
    let epsilon = if ds.is_empty() { 0.0 } else { error_indicator(&ds)? };
    let ordered_cost = (0..cost.nrows().min(cost.ncols())).map(|i| cost[(i, i)]).sum();
    Ok(IntervalMatch {
        k_left: left.k,
        k_right: right.k,
        assignment,
        mac,
        separations,
        scored,
        epsilon,
        ordered_cost,
    })
}
