//! Constitutive tensors and laminate layups.
//!
//! Stiffness matrices use Voigt notation with the component order
//! `[xx, yy, zz, yz, xz, xy]` (engineering shear strains). The wave travels
//! along `x`; `(y, z)` span the cross-section, and for plates `z` is the
//! thickness normal.

use crate::error::{Error, Result};

/// 6×6 Voigt stiffness matrix in Pa.
pub type Stiffness = [[f64; 6]; 6];

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub stiffness: Stiffness,
    /// kg/m³
    pub density: f64,
}

impl Material {
    /// Validates symmetry and positive definiteness of the stiffness.
    pub fn new(stiffness: Stiffness, density: f64) -> Result<Self> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidMaterial(format!("density must be positive, got {density}")));
        }
        let scale = max_abs(&stiffness);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidMaterial("stiffness is zero or not finite".into()));
        }
        let asym = max_asymmetry(&stiffness);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidMaterial(format!(
                "stiffness is not symmetric (max asymmetry {asym:e})"
            )));
        }
        if cholesky6(&stiffness).is_none() {
            return Err(Error::InvalidMaterial("stiffness is not positive definite".into()));
        }
        Ok(Self { stiffness, density })
    }

    pub fn isotropic(e: f64, nu: f64, density: f64) -> Result<Self> {
        Self::new(isotropic_stiffness(e, nu)?, density)
    }

    /// Same material with its stiffness rotated about the thickness normal.
    pub fn rotated(&self, theta_deg: f64) -> Self {
        Self { stiffness: rotate_stiffness(&self.stiffness, theta_deg), density: self.density }
    }
}

/// Voigt stiffness of an isotropic solid from Young's modulus and Poisson's ratio.
pub fn isotropic_stiffness(e: f64, nu: f64) -> Result<Stiffness> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidMaterial(format!("Young's modulus must be positive, got {e}")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::InvalidMaterial(format!("Poisson's ratio must lie in (-1, 0.5), got {nu}")));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut c = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = lambda;
        }
        c[i][i] = lambda + 2.0 * mu;
        c[i + 3][i + 3] = mu;
    }
    Ok(c)
}

/// Transversely isotropic material with the fiber along axis 1 (`x`).
///
/// The transverse shear modulus is not an input: `G23 = E2 / (2 (1 + nu23))`.
pub fn transversely_isotropic_stiffness(
    e1: f64,
    e2: f64,
    g12: f64,
    nu12: f64,
    nu23: f64,
    rho: f64,
) -> Result<Material> {
    for (name, v) in [("E1", e1), ("E2", e2), ("G12", g12)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidMaterial(format!("{name} must be positive, got {v}")));
        }
    }
    let g23 = e2 / (2.0 * (1.0 + nu23));
    let mut s = [[0.0; 6]; 6];
    s[0][0] = 1.0 / e1;
    s[1][1] = 1.0 / e2;
    s[2][2] = 1.0 / e2;
    s[0][1] = -nu12 / e1;
    s[0][2] = -nu12 / e1;
    s[1][2] = -nu23 / e2;
    s[1][0] = s[0][1];
    s[2][0] = s[0][2];
    s[2][1] = s[1][2];
    s[3][3] = 1.0 / g23;
    s[4][4] = 1.0 / g12;
    s[5][5] = 1.0 / g12;
    let c = invert6(&s).ok_or_else(|| Error::InvalidMaterial("compliance matrix is singular".into()))?;
    let c = symmetrize(&c);
    Material::new(c, rho)
}

/// Rotates a Voigt stiffness by `theta_deg` about the `z` axis.
///
/// Done through the full fourth-order tensor so that no Bond-matrix
/// bookkeeping of shear factors is needed.
pub fn rotate_stiffness(c: &Stiffness, theta_deg: f64) -> Stiffness {
    let t = theta_deg.to_radians();
    let (s, co) = t.sin_cos();
    let r = [[co, -s, 0.0], [s, co, 0.0], [0.0, 0.0, 1.0]];

    let mut full = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    full[i][j][k][l] = c[voigt(i, j)][voigt(k, l)];
                }
            }
        }
    }

    // Rotate one index at a time: 4 · 3^5 multiplications instead of 3^8.
    let mut tmp = full;
    for step in 0..4 {
        let mut next = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut acc = 0.0;
                        for p in 0..3 {
                            acc += match step {
                                0 => r[i][p] * tmp[p][j][k][l],
                                1 => r[j][p] * tmp[i][p][k][l],
                                2 => r[k][p] * tmp[i][j][p][l],
                                _ => r[l][p] * tmp[i][j][k][p],
                            };
                        }
                        next[i][j][k][l] = acc;
                    }
                }
            }
        }
        tmp = next;
    }

    const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
    let mut out = [[0.0; 6]; 6];
    for (a, &(i, j)) in PAIRS.iter().enumerate() {
        for (b, &(k, l)) in PAIRS.iter().enumerate() {
            out[a][b] = tmp[i][j][k][l];
        }
    }
    symmetrize(&out)
}

fn voigt(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        (0, 1) => 5,
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ply {
    pub angle_deg: f64,
    /// m
    pub thickness: f64,
    /// Index into [`Layup::materials`].
    pub material: usize,
}

/// Ordered stack of plies, bottom first.
#[derive(Debug, Clone, PartialEq)]
pub struct Layup {
    pub materials: Vec<Material>,
    pub plies: Vec<Ply>,
}

impl Layup {
    pub fn new(materials: Vec<Material>, plies: Vec<Ply>) -> Result<Self> {
        if plies.is_empty() {
            return Err(Error::InvalidMaterial("layup has no plies".into()));
        }
        for (i, p) in plies.iter().enumerate() {
            if !(p.thickness > 0.0 && p.thickness.is_finite()) {
                return Err(Error::InvalidMaterial(format!("ply {i} has non-positive thickness")));
            }
            if p.material >= materials.len() {
                return Err(Error::InvalidMaterial(format!(
                    "ply {i} references material {} but only {} are defined",
                    p.material,
                    materials.len()
                )));
            }
        }
        Ok(Self { materials, plies })
    }

    /// Builds the layup for a stacking sequence such as `[0/90/45/-45]_2s`:
    /// `angles` repeated `repeat` times, then mirrored if `symmetric`.
    pub fn from_sequence(
        material: Material,
        angles: &[f64],
        repeat: usize,
        symmetric: bool,
        ply_thickness: f64,
    ) -> Result<Self> {
        let mut seq: Vec<f64> = (0..repeat).flat_map(|_| angles.iter().copied()).collect();
        if symmetric {
            let mirror: Vec<f64> = seq.iter().rev().copied().collect();
            seq.extend(mirror);
        }
        let plies = seq
            .into_iter()
            .map(|angle_deg| Ply { angle_deg, thickness: ply_thickness, material: 0 })
            .collect();
        Self::new(vec![material], plies)
    }

    pub fn total_thickness(&self) -> f64 {
        self.plies.iter().map(|p| p.thickness).sum()
    }
}

pub(crate) fn max_abs(c: &Stiffness) -> f64 {
    c.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn max_asymmetry(c: &Stiffness) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..6 {
        for j in 0..6 {
            m = m.max((c[i][j] - c[j][i]).abs());
        }
    }
    m
}

fn symmetrize(c: &Stiffness) -> Stiffness {
    let mut out = *c;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let v = 0.5 * (c[i][j] + c[j][i]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

fn cholesky6(c: &Stiffness) -> Option<Stiffness> {
    let mut l = [[0.0; 6]; 6];
    for j in 0..6 {
        let mut d = c[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in (j + 1)..6 {
            let mut s = c[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Some(l)
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert6(a: &Stiffness) -> Option<Stiffness> {
    let mut m = *a;
    let mut inv = [[0.0; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = max_abs(a);
    for col in 0..6 {
        let pivot = (col..6).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..6 {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..6 {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..6 {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric 6×6 matrix (cyclic Jacobi), ascending.
pub fn symmetric_eigenvalues6(c: &Stiffness) -> [f64; 6] {
    let mut a = symmetrize(c);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= 1e-30 * max_abs(&a).powi(2) {
            break;
        }
        for p in 0..6 {
            for q in (p + 1)..6 {
                if a[p][q].abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..6 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = [0.0; 6];
    for i in 0..6 {
        ev[i] = a[i][i];
    }
    ev.sort_by(f64::total_cmp);
    ev
}
