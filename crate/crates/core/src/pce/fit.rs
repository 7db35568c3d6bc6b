//! Least-squares and basis-adaptive hybrid-LARS fitting with corrected
//! leave-one-out model selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{
    design_matrix, dot, extend_design, total_degree_count, total_degree_set, Basis, ColumnMatrix,
    MultiIndex,
};
use super::lars::Lars;
use super::surrogate::{PcSurrogate, Provenance};
use crate::error::{Error, Result};
use crate::sampling::Doe;

/// Condition number above which a least-squares design is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Ordinary least squares on a fixed basis.
pub fn ols_fit(doe: &Doe, responses: &[f64], indices: Vec<MultiIndex>) -> Result<PcSurrogate> {
    let n = doe.len();
    if responses.len() != n {
        return Err(Error::InsufficientSamples {
            required: n,
            got: responses.len(),
        });
    }
    let basis = Basis::new(doe.space().clone(), indices);
    let p = basis.len();
    if n <= p {
        return Err(Error::SingularDesign {
            rows: n,
            cols: p,
            condition: f64::INFINITY,
        });
    }
    let m = design_matrix(&basis, doe);
    let a = DMatrix::from_column_slice(n, p, &m.data);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularDesign {
            rows: n,
            cols: p,
            condition,
        });
    }
    let b = DVector::from_column_slice(responses);
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Parse(format!("least-squares solve failed: {e}")))?;
    PcSurrogate::new(
        doe.space().clone(),
        basis.indices().to_vec(),
        coef.iter().copied().collect(),
        Provenance {
            doe_seed: Some(doe.seed()),
            n_train: n,
            degree: basis.indices().iter().map(|i| i.degree()).max().unwrap_or(0),
            loo: None,
            label: String::new(),
        },
    )
}

/// Least-squares fit grown one column at a time (modified Gram-Schmidt with
/// re-orthogonalization), tracking residuals, leverages and
/// `trace((A^T A)^-1)`.
pub struct IncrementalQr {
    n: usize,
    y: Vec<f64>,
    q: Vec<Vec<f64>>,
    /// Columns of the upper-triangular inverse of R.
    rinv: Vec<Vec<f64>>,
    residual: Vec<f64>,
    leverage: Vec<f64>,
    trace_inv: f64,
}

impl IncrementalQr {
    pub fn new(y: &[f64]) -> Self {
        Self {
            n: y.len(),
            y: y.to_vec(),
            q: Vec::new(),
            rinv: Vec::new(),
            residual: y.to_vec(),
            leverage: vec![0.0; y.len()],
            trace_inv: 0.0,
        }
    }

    pub fn columns(&self) -> usize {
        self.q.len()
    }

    /// Appends a column; returns false (and leaves the fit unchanged) if it is
    /// numerically dependent on the current columns.
    pub fn push(&mut self, col: &[f64]) -> bool {
        let norm0 = dot(col, col).sqrt();
        if norm0 == 0.0 {
            return false;
        }
        let mut v = col.to_vec();
        let k = self.q.len();
        let mut r = vec![0.0; k];
        for _ in 0..2 {
            for (j, qj) in self.q.iter().enumerate() {
                let c = dot(qj, &v);
                r[j] += c;
                for (vi, &qi) in v.iter_mut().zip(qj) {
                    *vi -= c * qi;
                }
            }
        }
        let rho = dot(&v, &v).sqrt();
        if rho <= 1e-10 * norm0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= rho);
        // New column of R^-1: [-R^-1 r / rho ; 1 / rho].
        let mut col_inv = vec![0.0; k + 1];
        for (j, &rj) in r.iter().enumerate() {
            for (i, &ri) in self.rinv[j].iter().enumerate() {
                col_inv[i] -= ri * rj / rho;
            }
        }
        col_inv[k] = 1.0 / rho;
        self.trace_inv += col_inv.iter().map(|x| x * x).sum::<f64>();
        self.rinv.push(col_inv);
        let proj = dot(&v, &self.y);
        for i in 0..self.n {
            self.residual[i] -= proj * v[i];
            self.leverage[i] += v[i] * v[i];
        }
        self.q.push(v);
        true
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Corrected leave-one-out error relative to `variance`:
    /// `mean((e_i / (1 - h_i))^2) / variance * n / (n - P) * (1 + trace((A^T A)^-1))`.
    pub fn corrected_loo(&self, variance: f64) -> Option<f64> {
        let p = self.q.len();
        if self.n <= p || variance <= 0.0 {
            return None;
        }
        let mut acc = 0.0;
        for (e, h) in self.residual.iter().zip(&self.leverage) {
            let denom = 1.0 - h;
            if denom <= 1e-12 {
                return None;
            }
            acc += (e / denom) * (e / denom);
        }
        let nf = self.n as f64;
        let correction = nf / (nf - p as f64) * (1.0 + self.trace_inv);
        Some(acc / nf / variance * correction)
    }
}

/// Settings of the basis-adaptive hybrid LARS fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    pub p_max: usize,
    /// Stop a LARS path after this many entries without LOO improvement;
    /// `None` uses `max(20, n / 10)`.
    pub path_patience: Option<usize>,
    /// Stop raising the degree after this many degrees without improvement.
    pub degree_patience: usize,
    /// Upper bound on `n x candidates` entries of the stored design matrix;
    /// higher degrees are skipped once it would be exceeded.
    pub max_design_entries: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            p_max: 16,
            path_patience: None,
            degree_patience: 2,
            max_design_entries: 40_000_000,
        }
    }
}

/// Result of the hybrid LARS run at one candidate degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeScore {
    pub degree: usize,
    pub candidates: usize,
    pub selected: usize,
    pub loo: f64,
}

/// Basis-adaptive hybrid LARS.
///
/// For each degree `p`, LARS orders the total-degree candidates, every prefix
/// of the path is refit by least squares (with the constant term) and scored
/// by corrected LOO; the best model over all degrees is refit and returned.
pub fn adaptive_fit(doe: &Doe, responses: &[f64], cfg: &AdaptiveConfig) -> Result<PcSurrogate> {
    adaptive_fit_scored(doe, responses, cfg).map(|(s, _)| s)
}

pub fn adaptive_fit_scored(
    doe: &Doe,
    responses: &[f64],
    cfg: &AdaptiveConfig,
) -> Result<(PcSurrogate, Vec<DegreeScore>)> {
    let n = doe.len();
    let d = doe.dims();
    if n < d + 2 {
        return Err(Error::InsufficientSamples {
            required: d + 2,
            got: n,
        });
    }
    if responses.len() != n {
        return Err(Error::InsufficientSamples {
            required: n,
            got: responses.len(),
        });
    }
    if cfg.p_max == 0 {
        return Err(Error::InvalidConfig("p_max must be at least 1".into()));
    }
    let nf = n as f64;
    let mean = responses.iter().sum::<f64>() / nf;
    let variance = responses.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    let patience = cfg.path_patience.unwrap_or((n / 10).max(20));
    let ones = vec![1.0; n];

    if variance <= 0.0 {
        let mut s = ols_fit(doe, responses, vec![MultiIndex::zero(d)])?;
        s.provenance_mut().loo = Some(0.0);
        return Ok((s, Vec::new()));
    }

    let mut design = ColumnMatrix::new(n);
    let mut all_indices = vec![MultiIndex::zero(d)];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut scores = Vec::new();
    let mut stale = 0;
    for p in 1..=cfg.p_max {
        let count = total_degree_count(d, p);
        if (count - 1).saturating_mul(n) > cfg.max_design_entries {
            break;
        }
        let prev = all_indices.len();
        all_indices = total_degree_set(d, p);
        let basis = Basis::new(doe.space().clone(), all_indices[prev..].to_vec());
        extend_design(&mut design, &basis, 0, doe);

        let steps = (n - 1).min(design.cols);
        let mut qr = IncrementalQr::new(responses);
        qr.push(&ones);
        let mut degree_best = (qr.corrected_loo(variance).unwrap_or(f64::INFINITY), 0usize);
        let mut path = Vec::new();
        for j in Lars::new(&design, responses, steps) {
            if !qr.push(design.col(j)) {
                continue;
            }
            path.push(j);
            if let Some(e) = qr.corrected_loo(variance) {
                if e < degree_best.0 {
                    degree_best = (e, path.len());
                }
            }
            if path.len() - degree_best.1 > patience {
                break;
            }
        }
        path.truncate(degree_best.1);
        scores.push(DegreeScore {
            degree: p,
            candidates: design.cols,
            selected: path.len(),
            loo: degree_best.0,
        });
        let improved = best.as_ref().is_none_or(|b| degree_best.0 < b.0);
        if improved {
            best = Some((degree_best.0, p, path));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.degree_patience {
                break;
            }
        }
    }
    let (loo, degree, path) = best.ok_or_else(|| {
        Error::InvalidConfig("no candidate degree fits within the design size limit".into())
    })?;
    let mut cols = path;
    cols.sort_unstable();
    let mut indices = vec![MultiIndex::zero(d)];
    indices.extend(cols.iter().map(|&j| all_indices[j + 1].clone()));
    let mut s = ols_fit(doe, responses, indices)?;
    s.provenance_mut().degree = degree;
    s.provenance_mut().loo = Some(loo);
    Ok((s, scores))
}

/// `1 - mean((g - f)^2) / var(f)` on paired predictions and truth values.
pub fn q2_values(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    let n = truth.len();
    if n < 2 || predictions.len() != n {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let nf = n as f64;
    let mean = truth.iter().sum::<f64>() / nf;
    let var = truth.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    if var <= 0.0 {
        return Err(Error::ZeroVariance("Q2 reference".into()));
    }
    let mse = predictions
        .iter()
        .zip(truth)
        .map(|(g, f)| (g - f) * (g - f))
        .sum::<f64>()
        / nf;
    Ok(1.0 - mse / var)
}

/// Q2 of `surrogate` against `truth` on the points of `test`.
pub fn q2(surrogate: &PcSurrogate, truth: impl Fn(&[f64]) -> f64, test: &Doe) -> Result<f64> {
    let pred = surrogate.eval_doe(test);
    let t: Vec<f64> = test.rows().map(truth).collect();
    q2_values(&pred, &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{iid_sample, InputSpace, Purpose, RngStream};

    fn doe(d: usize, n: usize, seed: u64) -> Doe {
        let space = InputSpace::new(vec![(-1.0, 1.0); d]).unwrap();
        iid_sample(&space, n, RngStream::keyed(seed, 0, 0, Purpose::Doe)).unwrap()
    }

    #[test]
    fn ols_recovers_known_model() {
        let x = doe(2, 60, 1);
        let idx = total_degree_set(2, 3);
        let truth: Vec<f64> = (0..idx.len()).map(|k| (k as f64 * 0.7).sin()).collect();
        let model = PcSurrogate::new(x.space().clone(), idx.clone(), truth.clone(), Provenance::default()).unwrap();
        let y = model.eval_doe(&x);
        let fit = ols_fit(&x, &y, idx).unwrap();
        for (a, b) in fit.coeffs().iter().zip(&truth) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn ols_constant_response() {
        let x = doe(3, 20, 2);
        let fit = ols_fit(&x, &[2.5; 20], total_degree_set(3, 1)).unwrap();
        assert!((fit.mean() - 2.5).abs() < 1e-12);
        assert!(fit.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn ols_rejects_underdetermined() {
        let x = doe(2, 5, 3);
        assert!(matches!(
            ols_fit(&x, &[0.0; 5], total_degree_set(2, 2)),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn incremental_qr_leverage_and_trace() {
        let x = doe(1, 12, 4);
        let cols: Vec<Vec<f64>> = vec![
            vec![1.0; 12],
            x.rows().map(|r| r[0]).collect(),
            x.rows().map(|r| r[0] * r[0]).collect(),
        ];
        let y: Vec<f64> = x.rows().map(|r| r[0].exp()).collect();
        let mut qr = IncrementalQr::new(&y);
        for c in &cols {
            assert!(qr.push(c));
        }
        assert!(!qr.push(&vec![2.0; 12]));
        let a = DMatrix::from_fn(12, 3, |i, j| cols[j][i]);
        let gram_inv = (a.transpose() * &a).try_inverse().unwrap();
        assert!((gram_inv.trace() - qr.trace_inv).abs() < 1e-9 * gram_inv.trace());
        let hat = &a * &gram_inv * a.transpose();
        for i in 0..12 {
            assert!((hat[(i, i)] - qr.leverage[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn adaptive_fit_recovers_sparse_degree_two() {
        let x = doe(3, 200, 5);
        let idx = vec![
            MultiIndex(vec![0, 0, 0]),
            MultiIndex(vec![1, 0, 0]),
            MultiIndex(vec![1, 1, 0]),
            MultiIndex(vec![0, 0, 2]),
        ];
        let model = PcSurrogate::new(x.space().clone(), idx.clone(), vec![1.0, 2.0, -0.5, 0.75], Provenance::default()).unwrap();
        let y = model.eval_doe(&x);
        let fit = adaptive_fit(&x, &y, &AdaptiveConfig::default()).unwrap();
        assert!(fit.provenance().loo.unwrap() <= 1e-10);
        let mut got: Vec<_> = fit.indices().to_vec();
        got.sort();
        let mut want = idx;
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn q2_trivial_cases() {
        let truth = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(q2_values(&truth, &truth).unwrap(), 1.0);
        let m = truth.iter().sum::<f64>() / 4.0;
        assert!(q2_values(&[m; 4], &truth).unwrap().abs() < 1e-15);
        assert!(q2_values(&[1.0; 4], &[3.0; 4]).is_err());
    }
}
