//! Seeded random matrices and bases for property tests.

use disperkit::{CsrMatrix, SafeMatrices};
use faer::Mat;
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_like(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

pub fn random_real(rng: &mut impl Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| gaussian_like(rng))
}

pub fn random_complex(rng: &mut impl Rng, r: usize, c: usize) -> Mat<c64> {
    Mat::from_fn(r, c, |_, _| c64::new(gaussian_like(rng), gaussian_like(rng)))
}

/// `A Aᵀ / n + I`: symmetric with eigenvalues bounded away from zero.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> Mat<f64> {
    let a = random_real(rng, n, n);
    let s = &a * a.transpose();
    Mat::from_fn(n, n, |i, j| s[(i, j)] / n as f64 + if i == j { 1.0 } else { 0.0 })
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> Mat<f64> {
    let a = random_real(rng, n, n);
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn random_skew(rng: &mut impl Rng, n: usize) -> Mat<f64> {
    let a = random_real(rng, n, n);
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] - a[(j, i)]))
}

/// A random complete-spectrum family: `K1`, `K3` SPD, `K2` skew, `M` SPD.
pub fn random_family(rng: &mut impl Rng, n: usize) -> SafeMatrices {
    let k1 = random_spd(rng, n);
    let k2 = random_skew(rng, n);
    let k3 = random_spd(rng, n);
    let m = random_spd(rng, n);
    SafeMatrices::from_dense(&k1, &k2, &k3, &m).expect("valid random family")
}

/// Modified Gram–Schmidt in the `M` inner product.
pub fn m_orthonormalize(q: &mut Mat<c64>, m: &Mat<f64>) {
    let n = q.nrows();
    for j in 0..q.ncols() {
        for _pass in 0..2 {
            for i in 0..j {
                let mut dot = c64::new(0.0, 0.0);
                for r in 0..n {
                    let mut mq = c64::new(0.0, 0.0);
                    for c in 0..n {
                        mq += q[(c, j)] * m[(r, c)];
                    }
                    dot += q[(r, i)].conj() * mq;
                }
                for r in 0..n {
                    let v = q[(r, i)];
                    q[(r, j)] -= dot * v;
                }
            }
        }
        let mut nrm = 0.0;
        for r in 0..n {
            let mut mq = c64::new(0.0, 0.0);
            for c in 0..n {
                mq += q[(c, j)] * m[(r, c)];
            }
            nrm += (q[(r, j)].conj() * mq).re;
        }
        let nrm = nrm.sqrt();
        for r in 0..n {
            q[(r, j)] /= nrm;
        }
    }
}

/// Random `n × d` M-orthonormal basis.
pub fn m_orthonormal_basis(rng: &mut impl Rng, m: &Mat<f64>, d: usize) -> Mat<c64> {
    let mut q = random_complex(rng, m.nrows(), d);
    m_orthonormalize(&mut q, m);
    q
}

/// Random `d × d` unitary.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> Mat<c64> {
    m_orthonormal_basis(rng, &Mat::identity(d, d), d)
}

pub fn sparse(m: &Mat<f64>) -> CsrMatrix {
    CsrMatrix::from_dense(m)
}

pub fn column(q: &Mat<c64>, j: usize) -> Vec<c64> {
    (0..q.nrows()).map(|r| q[(r, j)]).collect()
}
