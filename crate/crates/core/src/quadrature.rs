//! One-dimensional quadrature rules and Lagrange derivative matrices.

/// Legendre polynomial P_n and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) from the three-term relation; fine away from x = ±1.
    let dp = if (1.0 - x * x).abs() > 1e-14 {
        n as f64 * (p0 - x * p1) / (1.0 - x * x)
    } else {
        let nf = n as f64;
        x.powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0
    };
    (p1, dp)
}

/// Gauss–Lobatto–Legendre nodes and weights on [-1, 1] for polynomial
/// order `p` (p + 1 points), nodes ascending.
pub fn gll(p: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1, "GLL order must be at least 1");
    let n = p + 1;
    let mut x = vec![0.0; n];
    x[0] = -1.0;
    x[p] = 1.0;
    // Interior nodes are the roots of P_p'. Newton on P_p' from Chebyshev–Gauss–Lobatto guesses;
    // P_p'' comes from the Legendre ODE: (1 - x²) P'' = 2x P' - p(p+1) P.
    let pf = p as f64;
    for i in 1..p {
        let mut xi = -(std::f64::consts::PI * i as f64 / pf).cos();
        for _ in 0..100 {
            let (pp, dp) = legendre(p, xi);
            let d2 = (2.0 * xi * dp - pf * (pf + 1.0) * pp) / (1.0 - xi * xi);
            let step = dp / d2;
            xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = xi;
    }
    // Exact antisymmetry keeps symmetric layups symmetric to the last bit.
    for i in 0..n / 2 {
        let v = 0.5 * (x[p - i] - x[i]);
        x[i] = -v;
        x[p - i] = v;
    }
    if n % 2 == 1 {
        x[p / 2] = 0.0;
    }
    let w = x
        .iter()
        .map(|&xi| {
            let (pp, _) = legendre(p, xi);
            2.0 / (pf * (pf + 1.0) * pp * pp)
        })
        .collect();
    (x, w)
}

/// Gauss–Legendre rule with `n` points.
pub fn gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        let mut xi = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, xi);
            let step = p / dp;
            xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, xi);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    (x, w)
}

/// Derivative matrix `D[i][j] = l_j'(x_i)` of the Lagrange basis on `nodes`.
pub fn lagrange_derivative_matrix(nodes: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let bary: Vec<f64> = (0..n)
        .map(|j| {
            let prod: f64 = (0..n).filter(|&m| m != j).map(|m| nodes[j] - nodes[m]).product();
            1.0 / prod
        })
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                d[i][j] = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}
