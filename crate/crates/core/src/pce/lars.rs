//! Least angle regression (LAR variant, no lasso drops).
//!
//! Candidate columns are centered and scaled to unit norm over the design;
//! the intercept is handled implicitly by centering the response.

use super::basis::{dot, ColumnMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Inactive,
    Active,
    Excluded,
}

/// Incremental LAR path; each call to [`Iterator::next`] returns the next
/// column entering the active set.
pub struct Lars<'a> {
    x: &'a ColumnMatrix,
    means: Vec<f64>,
    scales: Vec<f64>,
    status: Vec<Status>,
    corr: Vec<f64>,
    active: Vec<usize>,
    signs: Vec<f64>,
    /// Lower Cholesky factor of the signed active Gram matrix, row-packed.
    chol: Vec<Vec<f64>>,
    residual: Vec<f64>,
    max_steps: usize,
    tol: f64,
    u: Vec<f64>,
    a: Vec<f64>,
}

impl<'a> Lars<'a> {
    pub fn new(x: &'a ColumnMatrix, y: &[f64], max_steps: usize) -> Self {
        let n = x.rows;
        assert_eq!(y.len(), n);
        let nf = n as f64;
        let y_mean = y.iter().sum::<f64>() / nf;
        let residual: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let mut means = vec![0.0; x.cols];
        let mut scales = vec![0.0; x.cols];
        let mut status = vec![Status::Inactive; x.cols];
        let mut corr = vec![0.0; x.cols];
        for j in 0..x.cols {
            let col = x.col(j);
            let m = col.iter().sum::<f64>() / nf;
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            let peak = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            means[j] = m;
            scales[j] = ss.sqrt();
            if !(scales[j] > 1e-10 * peak.max(1e-300) * nf.sqrt()) {
                status[j] = Status::Excluded;
                continue;
            }
            corr[j] = dot(col, &residual) / scales[j];
        }
        let y_norm = dot(&residual, &residual).sqrt();
        Self {
            x,
            means,
            scales,
            status,
            corr,
            active: Vec::new(),
            signs: Vec::new(),
            chol: Vec::new(),
            residual,
            max_steps: max_steps.min(x.cols),
            tol: 1e-12 * y_norm.max(f64::MIN_POSITIVE),
            u: vec![0.0; n],
            a: vec![0.0; x.cols],
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Euclidean norm of the current LAR residual.
    pub fn residual_norm(&self) -> f64 {
        dot(&self.residual, &self.residual).sqrt()
    }

    /// Standardized inner product `z_i . z_j`.
    fn gram(&self, i: usize, j: usize) -> f64 {
        let n = self.x.rows as f64;
        (dot(self.x.col(i), self.x.col(j)) - n * self.means[i] * self.means[j])
            / (self.scales[i] * self.scales[j])
    }

    /// Tries to extend the Cholesky factor with column `j`; false if `j` is
    /// numerically in the span of the active set.
    fn try_add(&mut self, j: usize, sign: f64) -> bool {
        let k = self.active.len();
        let mut l = vec![0.0; k + 1];
        for (p, &a) in self.active.iter().enumerate() {
            let g = sign * self.signs[p] * self.gram(j, a);
            let mut v = g;
            for q in 0..p {
                v -= self.chol[p][q] * l[q];
            }
            l[p] = v / self.chol[p][p];
        }
        let d2 = 1.0 - l[..k].iter().map(|v| v * v).sum::<f64>();
        if d2 < 1e-10 {
            return false;
        }
        l[k] = d2.sqrt();
        self.chol.push(l);
        self.active.push(j);
        self.signs.push(sign);
        true
    }

    /// Solves `G w = 1` with the current factor.
    fn equiangular_weights(&self) -> Vec<f64> {
        let k = self.active.len();
        let mut z = vec![0.0; k];
        for p in 0..k {
            let mut v = 1.0;
            for q in 0..p {
                v -= self.chol[p][q] * z[q];
            }
            z[p] = v / self.chol[p][p];
        }
        let mut w = vec![0.0; k];
        for p in (0..k).rev() {
            let mut v = z[p];
            for q in p + 1..k {
                v -= self.chol[q][p] * w[q];
            }
            w[p] = v / self.chol[p][p];
        }
        w
    }
}

impl Iterator for Lars<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.active.len() >= self.max_steps {
            return None;
        }
        // Pick the most correlated inactive column that is not collinear.
        let entering = loop {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.x.cols {
                if self.status[j] != Status::Inactive {
                    continue;
                }
                let c = self.corr[j].abs();
                if best.is_none_or(|(_, b)| c > b) {
                    best = Some((j, c));
                }
            }
            let (j, c) = best?;
            if c <= self.tol {
                return None;
            }
            let sign = self.corr[j].signum();
            if self.try_add(j, sign) {
                self.status[j] = Status::Active;
                break j;
            }
            self.status[j] = Status::Excluded;
        };
        let big_c = self.corr[entering].abs();

        let w = self.equiangular_weights();
        let big_a = 1.0 / w.iter().sum::<f64>().sqrt();
        let n = self.x.rows;
        self.u.iter_mut().for_each(|v| *v = 0.0);
        for (p, &j) in self.active.iter().enumerate() {
            let coef = big_a * w[p] * self.signs[p] / self.scales[j];
            let m = self.means[j];
            for (ui, &xi) in self.u.iter_mut().zip(self.x.col(j)) {
                *ui += coef * (xi - m);
            }
        }
        let more_left = self.active.len() < self.max_steps
            && self.status.iter().any(|&s| s == Status::Inactive);
        let mut gamma = big_c / big_a;
        if more_left {
            for j in 0..self.x.cols {
                if self.status[j] != Status::Inactive {
                    continue;
                }
                let aj = dot(self.x.col(j), &self.u) / self.scales[j];
                self.a[j] = aj;
                let cj = self.corr[j];
                for g in [(big_c - cj) / (big_a - aj), (big_c + cj) / (big_a + aj)] {
                    if g > 1e-15 * gamma && g < gamma {
                        gamma = g;
                    }
                }
            }
            for j in 0..self.x.cols {
                if self.status[j] == Status::Inactive {
                    self.corr[j] -= gamma * self.a[j];
                }
            }
        }
        for (p, &j) in self.active.iter().enumerate() {
            self.corr[j] = self.signs[p] * (big_c - gamma * big_a);
        }
        for i in 0..n {
            self.residual[i] -= gamma * self.u[i];
        }
        Some(entering)
    }
}

/// Full LAR entry order, truncated at `min(n - 1, columns)` entries.
pub fn lars_select(x: &ColumnMatrix, y: &[f64]) -> Vec<usize> {
    let steps = x.rows.saturating_sub(1).min(x.cols);
    Lars::new(x, y, steps).collect()
}
