//! Univariate Legendre polynomials, orthonormal for the uniform measure on
//! `[-1, 1]`, and Gauss-Legendre quadrature.

/// Fills `out[0..=degree]` with `sqrt(2n+1) P_n(t)`.
pub fn orthonormal_legendre(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    let mut p_prev = 1.0;
    let mut p = t;
    out[1] = 3f64.sqrt() * t;
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * p - nf * p_prev) / (nf + 1.0);
        p_prev = p;
        p = next;
        out[n + 1] = (2.0 * nf + 3.0).sqrt() * p;
    }
}

/// Single orthonormal Legendre value of degree `n` at `t`.
pub fn orthonormal_legendre_value(n: usize, t: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    orthonormal_legendre(t, &mut buf);
    buf[n]
}

/// `m`-point Gauss-Legendre rule on `[-1, 1]` with weights normalized to the
/// uniform probability measure (they sum to 1). Exact for degree `2m - 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
