//! Element kernels and global assembly of the SAFE matrix family
//! `K(k) = K1 + i k K2 + k² K3` and the mass matrix `M`.

use std::sync::OnceLock;

use faer::Mat;
use num_complex::Complex64 as c64;
use rayon::prelude::*;

use crate::eigensolve::Reduced;
use crate::error::{Error, Result};
use crate::materials::Stiffness;
use crate::mesh::{quad9_jacobian, quad9_shape, CrossSectionMesh, ElementKind};
use crate::quadrature;
use crate::sparse::CsrMatrix;

/// Characteristic length and velocity used to nondimensionalize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// m
    pub a: f64,
    /// m/s
    pub c_t: f64,
}

impl Scales {
    pub const UNIT: Scales = Scales { a: 1.0, c_t: 1.0 };
}

/// Normalized SAFE matrices. Eigenvalues of `K(k) q = λ M q` are
/// `λ = (ω a / c_T)²` for dimensionless wavenumber `k a`.
#[derive(Debug)]
pub struct SafeMatrices {
    pub k1: CsrMatrix,
    pub k2: CsrMatrix,
    pub k3: CsrMatrix,
    pub m: CsrMatrix,
    pub scales: Scales,
    pub(crate) reduced: OnceLock<Reduced>,
}

impl Clone for SafeMatrices {
    fn clone(&self) -> Self {
        Self::from_parts_unchecked(self.k1.clone(), self.k2.clone(), self.k3.clone(), self.m.clone(), self.scales)
    }
}

impl SafeMatrices {
    /// Wraps already-assembled matrices after checking the structural
    /// invariants (symmetry of K1, K3, M and skewness of K2).
    pub fn from_parts(k1: CsrMatrix, k2: CsrMatrix, k3: CsrMatrix, m: CsrMatrix, scales: Scales) -> Result<Self> {
        let n = m.nrows();
        for (name, a) in [("K1", &k1), ("K2", &k2), ("K3", &k3), ("M", &m)] {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Structural(format!("{name} is {}x{}, expected {n}x{n}", a.nrows(), a.ncols())));
            }
        }
        let scale = k1.max_abs().max(k2.max_abs()).max(k3.max_abs()).max(m.max_abs());
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        for (name, a, sign) in [("K1", &k1, 1.0), ("K2", &k2, -1.0), ("K3", &k3, 1.0), ("M", &m, 1.0)] {
            let dev = a.max_deviation_from_transpose(sign);
            if dev > tol {
                let what = if sign > 0.0 { "symmetric" } else { "skew-symmetric" };
                return Err(Error::Structural(format!("{name} is not {what} (deviation {dev:e})")));
            }
        }
        Ok(Self::from_parts_unchecked(k1, k2, k3, m, scales))
    }

    pub(crate) fn from_parts_unchecked(
        k1: CsrMatrix,
        k2: CsrMatrix,
        k3: CsrMatrix,
        m: CsrMatrix,
        scales: Scales,
    ) -> Self {
        Self { k1, k2, k3, m, scales, reduced: OnceLock::new() }
    }

    /// Convenience for small synthetic families given as dense matrices.
    pub fn from_dense(k1: &Mat<f64>, k2: &Mat<f64>, k3: &Mat<f64>, m: &Mat<f64>) -> Result<Self> {
        Self::from_parts(
            CsrMatrix::from_dense(k1),
            CsrMatrix::from_dense(k2),
            CsrMatrix::from_dense(k3),
            CsrMatrix::from_dense(m),
            Scales::UNIT,
        )
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// `K(k) = K1 + i k K2 + k² K3`, dense.
    pub fn stiffness_at(&self, k: f64) -> Mat<c64> {
        self.combine(|k1, k2, k3| c64::new(k1 + k * k * k3, k * k2))
    }

    /// `K'(k) = i K2 + 2 k K3`, dense.
    pub fn stiffness_derivative_at(&self, k: f64) -> Mat<c64> {
        self.combine(|_, k2, k3| c64::new(2.0 * k * k3, k2))
    }

    fn combine(&self, f: impl Fn(f64, f64, f64) -> c64) -> Mat<c64> {
        let n = self.n();
        let (d1, d2, d3) = (self.k1.to_dense(), self.k2.to_dense(), self.k3.to_dense());
        Mat::from_fn(n, n, |i, j| f(d1[(i, j)], d2[(i, j)], d3[(i, j)]))
    }

    /// Debug dump of the four matrices as `i j value` triplet text.
    pub fn to_triplet_text(&self) -> [(&'static str, String); 4] {
        [
            ("K1", self.k1.to_triplet_text()),
            ("K2", self.k2.to_triplet_text()),
            ("K3", self.k3.to_triplet_text()),
            ("M", self.m.to_triplet_text()),
        ]
    }
}

/// Strain-displacement and shape data at the quadrature points of one element.
#[derive(Debug, Clone)]
pub struct ElementKernels {
    /// 6 × 3n_e per point (Voigt rows `[xx, yy, zz, yz, xz, xy]`).
    pub b0: Vec<Mat<f64>>,
    /// 6 × 3n_e per point.
    pub b1: Vec<Mat<f64>>,
    /// 3 × 3n_e per point.
    pub n: Vec<Mat<f64>>,
    /// Quadrature weight times Jacobian determinant.
    pub weights: Vec<f64>,
}

impl ElementKernels {
    /// `shape[a]` is N_a; `grad[a]` is (N_a,y, N_a,z).
    fn push_point(&mut self, shape: &[f64], grad: &[[f64; 2]], weight: f64) {
        let ne = shape.len();
        let mut b0 = Mat::zeros(6, 3 * ne);
        let mut b1 = Mat::zeros(6, 3 * ne);
        let mut n = Mat::zeros(3, 3 * ne);
        for a in 0..ne {
            let (ux, uy, uz) = (3 * a, 3 * a + 1, 3 * a + 2);
            let [dy, dz] = grad[a];
            // L_x N: xx <- ux, xz <- uz, xy <- uy
            b1[(0, ux)] = shape[a];
            b1[(4, uz)] = shape[a];
            b1[(5, uy)] = shape[a];
            // L_y N,y
            b0[(1, uy)] += dy;
            b0[(3, uz)] += dy;
            b0[(5, ux)] += dy;
            // L_z N,z
            b0[(2, uz)] += dz;
            b0[(3, uy)] += dz;
            b0[(4, ux)] += dz;
            for c in 0..3 {
                n[(c, 3 * a + c)] = shape[a];
            }
        }
        self.b0.push(b0);
        self.b1.push(b1);
        self.n.push(n);
        self.weights.push(weight);
    }

    fn empty() -> Self {
        Self { b0: Vec::new(), b1: Vec::new(), n: Vec::new(), weights: Vec::new() }
    }
}

/// Kernels for element `e` of `mesh`; `gauss_points` sets the per-direction
/// rule for quad9 (line elements always use collocated GLL).
pub fn element_kernels(mesh: &CrossSectionMesh, e: usize, gauss_points: usize) -> Result<ElementKernels> {
    let el = &mesh.elements[e];
    let mut ker = ElementKernels::empty();
    match el.kind {
        ElementKind::LineGll { order } => {
            let (xi, w) = quadrature::gll(order);
            let d = quadrature::lagrange_derivative_matrix(&xi);
            let z: Vec<f64> = el.nodes.iter().map(|&n| mesh.nodes[n][1]).collect();
            for i in 0..=order {
                let dzdxi: f64 = (0..=order).map(|a| d[i][a] * z[a]).sum();
                if dzdxi <= 0.0 {
                    return Err(Error::Assembly { element: e, message: format!("non-positive Jacobian {dzdxi:e}") });
                }
                let shape: Vec<f64> = (0..=order).map(|a| if a == i { 1.0 } else { 0.0 }).collect();
                let grad: Vec<[f64; 2]> = (0..=order).map(|a| [0.0, d[i][a] / dzdxi]).collect();
                ker.push_point(&shape, &grad, w[i] * dzdxi);
            }
        }
        ElementKind::Quad9 => {
            let (gx, gw) = quadrature::gauss(gauss_points);
            let xy: Vec<[f64; 2]> = el.nodes.iter().map(|&n| mesh.nodes[n]).collect();
            for (p, &xi) in gx.iter().enumerate() {
                for (q, &eta) in gx.iter().enumerate() {
                    let (shape, dn) = quad9_shape(xi, eta);
                    let j = quad9_jacobian(&xy, &dn);
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    if !(det > 0.0) {
                        return Err(Error::Assembly {
                            element: e,
                            message: format!("non-positive Jacobian {det:e} at (xi, eta) = ({xi:.3}, {eta:.3})"),
                        });
                    }
                    // [N,y N,z]ᵀ = J⁻¹ [N,ξ N,η]ᵀ
                    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
                    let grad: Vec<[f64; 2]> = dn
                        .iter()
                        .map(|d| [inv[0][0] * d[0] + inv[0][1] * d[1], inv[1][0] * d[0] + inv[1][1] * d[1]])
                        .collect();
                    ker.push_point(&shape, &grad, gw[p] * gw[q] * det);
                }
            }
        }
    }
    Ok(ker)
}

struct ElementMatrices {
    k1: Mat<f64>,
    k2: Mat<f64>,
    k3: Mat<f64>,
    m: Mat<f64>,
}

fn element_matrices(ker: &ElementKernels, c: &Stiffness, rho: f64) -> ElementMatrices {
    let nd = ker.b0[0].ncols();
    let cm = Mat::from_fn(6, 6, |i, j| c[i][j]);
    let mut k1 = Mat::<f64>::zeros(nd, nd);
    let mut x = Mat::<f64>::zeros(nd, nd);
    let mut k3 = Mat::<f64>::zeros(nd, nd);
    let mut m = Mat::<f64>::zeros(nd, nd);
    for p in 0..ker.weights.len() {
        let w = ker.weights[p];
        let (b0, b1, n) = (&ker.b0[p], &ker.b1[p], &ker.n[p]);
        let cb0 = &cm * b0;
        let cb1 = &cm * b1;
        k1 += faer::Scale(w) * (b0.transpose() * &cb0);
        x += faer::Scale(w) * (b0.transpose() * &cb1);
        k3 += faer::Scale(w) * (b1.transpose() * &cb1);
        m += faer::Scale(w * rho) * (n.transpose() * n);
    }
    let sym = |a: &Mat<f64>| Mat::from_fn(nd, nd, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    ElementMatrices {
        k1: sym(&k1),
        k2: Mat::from_fn(nd, nd, |i, j| x[(i, j)] - x[(j, i)]),
        k3: sym(&k3),
        m: sym(&m),
    }
}

/// Assembles the normalized SAFE family with the default quadrature
/// (collocated GLL for line elements, 3×3 Gauss for quad9).
pub fn assemble(mesh: &CrossSectionMesh, scales: Scales) -> Result<SafeMatrices> {
    assemble_with_quadrature(mesh, scales, 3)
}

/// As [`assemble`] with an explicit Gauss rule for quad9 elements.
pub fn assemble_with_quadrature(mesh: &CrossSectionMesh, scales: Scales, gauss_points: usize) -> Result<SafeMatrices> {
    mesh.validate()?;
    if !(scales.a > 0.0 && scales.c_t > 0.0) {
        return Err(Error::InvalidConfig(format!("scales must be positive, got {scales:?}")));
    }
    let rho_ref = mesh.materials[0].density;
    let c_ref = rho_ref * scales.c_t * scales.c_t;

    let element_mats: Vec<(usize, ElementMatrices)> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let el = &mesh.elements[e];
            let mat = &mesh.materials[el.material];
            let mut c = mat.stiffness;
            c.iter_mut().flatten().for_each(|v| *v /= c_ref);
            let ker = element_kernels(mesh, e, gauss_points)?;
            Ok((e, element_matrices(&ker, &c, mat.density / rho_ref)))
        })
        .collect::<Result<_>>()?;

    // Sequential scatter in element order keeps the summation order fixed.
    let n = mesh.dof_count();
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut t3 = Vec::new();
    let mut tm = Vec::new();
    for (e, em) in &element_mats {
        let dofs: Vec<usize> =
            mesh.elements[*e].nodes.iter().flat_map(|&node| (0..3).map(move |c| 3 * node + c)).collect();
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                for (mat, trip) in [(&em.k1, &mut t1), (&em.k2, &mut t2), (&em.k3, &mut t3), (&em.m, &mut tm)] {
                    let v = mat[(a, b)];
                    if v != 0.0 {
                        trip.push((ga, gb, v));
                    }
                }
            }
        }
    }
    let build = |t: &[(usize, usize, f64)]| CsrMatrix::from_triplets(n, n, t);
    Ok(SafeMatrices::from_parts_unchecked(build(&t1), build(&t2), build(&t3), build(&tm), scales))
}
