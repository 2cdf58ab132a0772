//! Independent Rayleigh–Lamb and SH0 dispersion oracle for a free isotropic
//! plate of half-thickness 1 (non-dimensional).
//!
//! Frequencies are returned as `Ω = ωa/c_T` for bulk speeds already divided
//! by `c_T`. The characteristic functions are written in terms of `p²` and
//! `q²` only, so they stay real and smooth through the bulk-wave cut lines.

use roots::{find_root_brent, SimpleConvergency};

#[derive(Debug, Clone, Copy)]
pub struct IsotropicPlate {
    /// Longitudinal bulk speed over `c_T`.
    pub c_l: f64,
    /// Shear bulk speed over `c_T`.
    pub c_s: f64,
}

impl IsotropicPlate {
    pub fn from_engineering(e: f64, nu: f64, rho: f64, c_t: f64) -> Self {
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        Self { c_l: ((lambda + 2.0 * mu) / rho).sqrt() / c_t, c_s: (mu / rho).sqrt() / c_t }
    }
}

/// `(cos(√s), sin(√s)/√s, √s·sin(√s))` continued analytically to `s < 0`.
fn trig(s: f64) -> (f64, f64, f64) {
    if s > 0.0 {
        let r = s.sqrt();
        (r.cos(), if r < 1e-8 { 1.0 } else { r.sin() / r }, r * r.sin())
    } else if s < 0.0 {
        let r = (-s).sqrt();
        (r.cosh(), if r < 1e-8 { 1.0 } else { r.sinh() / r }, -r * r.sinh())
    } else {
        (1.0, 1.0, 0.0)
    }
}

fn squares(plate: &IsotropicPlate, k: f64, w: f64) -> (f64, f64) {
    ((w / plate.c_l).powi(2) - k * k, (w / plate.c_s).powi(2) - k * k)
}

/// Symmetric (S) family characteristic function.
pub fn symmetric(plate: &IsotropicPlate, k: f64, w: f64) -> f64 {
    let (p2, q2) = squares(plate, k, w);
    let (cp, _, psp) = trig(p2);
    let (cq, sq_q, _) = trig(q2);
    (k * k - q2).powi(2) * cp * sq_q + 4.0 * k * k * psp * cq
}

/// Antisymmetric (A) family characteristic function.
pub fn antisymmetric(plate: &IsotropicPlate, k: f64, w: f64) -> f64 {
    let (p2, q2) = squares(plate, k, w);
    let (cp, sp_p, _) = trig(p2);
    let (cq, _, qsq) = trig(q2);
    (k * k - q2).powi(2) * sp_p * cq + 4.0 * k * k * cp * qsq
}

/// Lowest positive root in `Ω` of `f(k, ·)`, by scanning then Brent. Both
/// families vanish trivially at `Ω = 0`; dividing by `Ω²` keeps that zero
/// from stalling the bracket search.
fn lowest_root(f: impl Fn(f64) -> f64, w_max: f64) -> Option<f64> {
    let f = |w: f64| f(w) / (w * w);
    let n = 20_000;
    let dw = w_max / n as f64;
    let mut a = dw;
    let mut fa = f(a);
    for i in 2..=n {
        let b = i as f64 * dw;
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa * fb < 0.0 {
            // Absolute tolerance on both axes; keep it above one ULP of Ω.
            let mut conv = SimpleConvergency { eps: 4.0 * f64::EPSILON * b, max_iter: 500 };
            return find_root_brent(a, b, &f, &mut conv).ok();
        }
        a = b;
        fa = fb;
    }
    None
}

/// Fundamental antisymmetric (flexural) frequency at wavenumber `k`.
pub fn a0(plate: &IsotropicPlate, k: f64) -> f64 {
    let scale = k.powi(4).max(1e-12);
    lowest_root(|w| antisymmetric(plate, k, w) / scale, 1.05 * plate.c_l * k).expect("A0 root")
}

/// Fundamental symmetric (extensional) frequency at wavenumber `k`.
pub fn s0(plate: &IsotropicPlate, k: f64) -> f64 {
    let scale = k.powi(4).max(1e-12);
    lowest_root(|w| symmetric(plate, k, w) / scale, 1.05 * plate.c_l * k).expect("S0 root")
}

/// Fundamental shear-horizontal frequency (non-dispersive).
pub fn sh0(plate: &IsotropicPlate, k: f64) -> f64 {
    plate.c_s * k
}

/// Rayleigh surface-wave speed: the root of `(2 − ξ²)² = 4√(1 − ξ²)√(1 − ξ²κ²)`
/// with `ξ = c/c_s` and `κ = c_s/c_l`.
pub fn rayleigh_speed(plate: &IsotropicPlate) -> f64 {
    let kappa = plate.c_s / plate.c_l;
    let f = |x: f64| (2.0 - x * x).powi(2) - 4.0 * (1.0 - x * x).sqrt() * (1.0 - x * x * kappa * kappa).sqrt();
    let mut conv = SimpleConvergency { eps: 1e-15, max_iter: 200 };
    find_root_brent(0.5, 0.999_999, f, &mut conv).expect("Rayleigh root") * plate.c_s
}
