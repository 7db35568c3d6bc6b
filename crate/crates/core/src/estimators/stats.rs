//! Plain Monte Carlo moments and streaming co-moment accumulators.

use crate::error::{Error, Result};

pub fn mc_mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { required: 1, got: 0 });
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Unbiased sample variance.
pub fn mc_var(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let m = samples.iter().sum::<f64>() / n as f64;
    Ok(samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64)
}

/// Unbiased sample covariance of two equally long samples.
pub fn sample_cov(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    Ok(a[..n].iter().zip(&b[..n]).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1) as f64)
}

/// Pearson correlation; errors on a zero-variance argument.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let c = sample_cov(a, b)?;
    let (va, vb) = (mc_var(a)?, mc_var(b)?);
    if va <= 0.0 || vb <= 0.0 {
        return Err(Error::ZeroVariance("correlation of a constant sample".into()));
    }
    Ok(c / (va * vb).sqrt())
}

/// Root mean squared error of `values` around `reference`.
pub fn rmse(values: &[f64], reference: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| (v - reference) * (v - reference)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Streaming means and co-moments of a fixed-width vector of variables,
/// updated in a fixed order so results are reproducible bit for bit.
#[derive(Debug, Clone)]
pub struct Comoments {
    n: usize,
    mean: Vec<f64>,
    /// Row-major sums of centered cross products.
    m2: Vec<f64>,
    delta: Vec<f64>,
}

impl Comoments {
    pub fn new(width: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width * width],
            delta: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, v: &[f64]) {
        let w = self.mean.len();
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for i in 0..w {
            self.delta[i] = v[i] - self.mean[i];
            self.mean[i] += self.delta[i] * inv;
        }
        for i in 0..w {
            let after = v[i] - self.mean[i];
            for j in 0..=i {
                self.m2[i * w + j] += self.delta[j] * after;
            }
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Unbiased covariance of variables `i` and `j`.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        let w = self.mean.len();
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        if self.n < 2 {
            return 0.0;
        }
        self.m2[a * w + b] / (self.n - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_sample() {
        assert_eq!(mc_mean(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(mc_var(&[0.0, 2.0]).unwrap(), 2.0);
        assert_eq!(mc_var(&[3.0; 5]).unwrap(), 0.0);
        assert!(mc_var(&[1.0]).is_err());
        assert!(mc_mean(&[]).is_err());
    }

    #[test]
    fn comoments_match_two_pass() {
        let a: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..50).map(|i| ((i * 13) % 7) as f64 + 0.1 * i as f64).collect();
        let mut acc = Comoments::new(2);
        for i in 0..50 {
            acc.push(&[a[i], b[i]]);
        }
        assert!((acc.cov(0, 1) - sample_cov(&a, &b).unwrap()).abs() < 1e-12);
        assert!((acc.cov(1, 0) - sample_cov(&a, &b).unwrap()).abs() < 1e-12);
        assert!((acc.cov(0, 0) - mc_var(&a).unwrap()).abs() < 1e-12);
        assert!((acc.mean(1) - mc_mean(&b).unwrap()).abs() < 1e-12);
    }
}
