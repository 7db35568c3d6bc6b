//! Control variate estimators of the expectation and the variance with
//! optimal parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::stats::{mc_mean, mc_var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Expectation,
    Variance,
}

/// Relative pivot threshold below which a control is dropped.
pub const DROP_TOLERANCE: f64 = 1e-10;

/// Optimal control parameters for one estimator.
///
/// `sigma`, `c` and `target_variance` are per-sample quantities, i.e. `n`
/// times the covariances of the corresponding estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSolution {
    pub sigma: DMatrix<f64>,
    pub c: DVector<f64>,
    pub alpha: DVector<f64>,
    pub r2: f64,
    pub target_variance: f64,
    /// Controls left out because they are affine in the kept ones.
    pub dropped: Vec<usize>,
}

impl CvSolution {
    /// `V - 2 a^T c + a^T S a`, the per-sample variance for parameter `a`.
    pub fn variance_at(&self, alpha: &DVector<f64>) -> f64 {
        self.target_variance - 2.0 * alpha.dot(&self.c) + (alpha.transpose() * &self.sigma * alpha)[(0, 0)]
    }
}

/// Kept indices of a greedy pivoted Cholesky factorization of `sigma`.
fn pivoted_rank(sigma: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let m = sigma.nrows();
    let max_diag = (0..m).map(|i| sigma[(i, i)]).fold(0.0f64, f64::max);
    let tol = DROP_TOLERANCE * max_diag;
    let mut diag: Vec<f64> = (0..m).map(|i| sigma[(i, i)]).collect();
    let mut l = DMatrix::<f64>::zeros(m, m);
    let mut kept = Vec::new();
    let mut remaining: Vec<usize> = (0..m).collect();
    if max_diag > 0.0 {
        while !remaining.is_empty() {
            let (pos, &p) = remaining
                .iter()
                .enumerate()
                .max_by(|a, b| diag[*a.1].total_cmp(&diag[*b.1]).then(b.1.cmp(a.1)))
                .expect("nonempty");
            if diag[p] <= tol {
                break;
            }
            let k = kept.len();
            let piv = diag[p].sqrt();
            l[(p, k)] = piv;
            remaining.remove(pos);
            for &i in &remaining {
                let mut v = sigma[(i, p)];
                for q in 0..k {
                    v -= l[(i, q)] * l[(p, q)];
                }
                l[(i, k)] = v / piv;
                diag[i] -= l[(i, k)] * l[(i, k)];
            }
            kept.push(p);
        }
    }
    kept.sort_unstable();
    remaining.sort_unstable();
    (kept, remaining)
}

/// Optimal parameters `alpha = Sigma^-1 c` with rank-revealing drops.
pub fn solve_controls(sigma: DMatrix<f64>, c: DVector<f64>, target_variance: f64) -> CvSolution {
    let m = c.len();
    let (kept, dropped) = pivoted_rank(&sigma);
    let mut alpha = DVector::zeros(m);
    if !kept.is_empty() {
        let k = kept.len();
        let sub = DMatrix::from_fn(k, k, |i, j| sigma[(kept[i], kept[j])]);
        let rhs = DVector::from_fn(k, |i, _| c[kept[i]]);
        let sol = match sub.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => sub.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(k)),
        };
        for (i, &p) in kept.iter().enumerate() {
            alpha[p] = sol[i];
        }
    }
    let explained = alpha.dot(&c);
    let r2 = if target_variance > 0.0 {
        (explained / target_variance).clamp(0.0, 1.0)
    } else {
        0.0
    };
    CvSolution {
        sigma,
        c,
        alpha,
        r2,
        target_variance,
        dropped,
    }
}

/// A single-level control variate problem on a common input sample.
#[derive(Debug, Clone)]
pub struct CvProblem<'a> {
    pub statistic: Statistic,
    pub y: &'a [f64],
    pub z: Vec<&'a [f64]>,
    /// Exact control statistics: means for the expectation, variances for the
    /// variance.
    pub tau: Vec<f64>,
    /// Exact control means. For the variance statistic they switch to the
    /// known-mean form, whose controls are the sample means of `(Z - mu)^2`.
    pub control_means: Option<Vec<f64>>,
    /// Exact per-sample covariance of the controls, replacing the sample one.
    pub sigma: Option<DMatrix<f64>>,
    /// Fail instead of dropping degenerate controls.
    pub strict: bool,
}

impl<'a> CvProblem<'a> {
    pub fn expectation(y: &'a [f64], z: Vec<&'a [f64]>, means: Vec<f64>) -> Self {
        Self {
            statistic: Statistic::Expectation,
            y,
            z,
            tau: means,
            control_means: None,
            sigma: None,
            strict: false,
        }
    }

    fn check(&self) -> Result<usize> {
        let n = self.y.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { required: 2, got: n });
        }
        if self.z.iter().any(|c| c.len() != n) || self.tau.len() != self.z.len() {
            return Err(Error::InvalidConfig("control samples and statistics must align with the primary sample".into()));
        }
        if self.z.is_empty() {
            return Err(Error::InvalidConfig("at least one control is required".into()));
        }
        Ok(n)
    }

    /// Per-sample primary and control features whose covariances define the
    /// problem, plus the finite-sample corrections of the variance form.
    fn features(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        match (self.statistic, &self.control_means) {
            (Statistic::Expectation, _) => (self.y.to_vec(), self.z.iter().map(|c| c.to_vec()).collect()),
            (Statistic::Variance, known) => {
                let ym = mean(self.y);
                let fy = self.y.iter().map(|v| (v - ym) * (v - ym)).collect();
                let fz = self
                    .z
                    .iter()
                    .enumerate()
                    .map(|(m, c)| {
                        let mu = known.as_ref().map_or_else(|| mean(c), |k| k[m]);
                        c.iter().map(|v| (v - mu) * (v - mu)).collect()
                    })
                    .collect();
                (fy, fz)
            }
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cov(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

/// Optimal parameters and variance reduction factor for `problem`.
pub fn cv_solve(problem: &CvProblem) -> Result<CvSolution> {
    let n = problem.check()?;
    let m = problem.z.len();
    let (fy, fz) = problem.features();
    let mut sigma = match &problem.sigma {
        Some(s) => {
            if s.nrows() != m || s.ncols() != m {
                return Err(Error::InvalidConfig("exact covariance has the wrong shape".into()));
            }
            s.clone()
        }
        None => DMatrix::from_fn(m, m, |i, j| cov(&fz[i], &fz[j])),
    };
    let mut c = DVector::from_fn(m, |i, _| cov(&fy, &fz[i]));
    let mut v = cov(&fy, &fy);
    if problem.statistic == Statistic::Variance {
        let k = 2.0 / (n - 1) as f64;
        let vy = cov(problem.y, problem.y);
        v += k * vy * vy;
        if problem.control_means.is_none() {
            for i in 0..m {
                c[i] += k * cov(problem.y, problem.z[i]).powi(2);
                if problem.sigma.is_none() {
                    for j in 0..m {
                        sigma[(i, j)] += k * cov(problem.z[i], problem.z[j]).powi(2);
                    }
                }
            }
        }
    }
    let sol = solve_controls(sigma, c, v);
    if problem.strict && !sol.dropped.is_empty() {
        return Err(Error::SingularControls { dropped: sol.dropped });
    }
    Ok(sol)
}

/// `theta_hat - alpha^T (tau_hat - tau)`.
pub fn cv_estimate(problem: &CvProblem, solution: &CvSolution) -> Result<f64> {
    problem.check()?;
    let (theta, taus): (f64, Vec<f64>) = match (problem.statistic, &problem.control_means) {
        (Statistic::Expectation, _) => (
            mc_mean(problem.y)?,
            problem.z.iter().map(|c| mean(c)).collect(),
        ),
        (Statistic::Variance, Some(mu)) => (
            mc_var(problem.y)?,
            problem
                .z
                .iter()
                .zip(mu)
                .map(|(c, m)| c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / c.len() as f64)
                .collect(),
        ),
        (Statistic::Variance, None) => (
            mc_var(problem.y)?,
            problem.z.iter().map(|c| mc_var(c)).collect::<Result<_>>()?,
        ),
    };
    Ok(theta
        - taus
            .iter()
            .zip(&problem.tau)
            .zip(solution.alpha.iter())
            .map(|((t, e), a)| a * (t - e))
            .sum::<f64>())
}

/// Moments of a discrete joint law given as `(y, z, probability)` atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMoments {
    pub var_y: f64,
    pub var_z: f64,
    pub cov_yz: f64,
    /// `C[(Y - EY)^2, (Z - EZ)^2]`
    pub cov_sq: f64,
}

impl JointMoments {
    pub fn from_atoms(atoms: &[(f64, f64, f64)]) -> Self {
        let total: f64 = atoms.iter().map(|a| a.2).sum();
        let e = |f: &dyn Fn(f64, f64) -> f64| atoms.iter().map(|&(y, z, p)| p * f(y, z)).sum::<f64>() / total;
        let my = e(&|y, _| y);
        let mz = e(&|_, z| z);
        let var_y = e(&|y, _| (y - my).powi(2));
        let var_z = e(&|_, z| (z - mz).powi(2));
        let cov_yz = e(&|y, z| (y - my) * (z - mz));
        let cov_sq = e(&|y, z| (y - my).powi(2) * (z - mz).powi(2)) - var_y * var_z;
        Self {
            var_y,
            var_z,
            cov_yz,
            cov_sq,
        }
    }
}

/// `(a_n, b_n, c_n)`: the expectations of `E^[Y'^2] E^[Z'^2]`,
/// `E^[Y']^2 E^[Z']^2` and `E^[Y'^2] E^[Z']^2` for centered `Y'`, `Z'` over
/// an i.i.d. `n`-sample.
pub fn centered_moment_products(m: &JointMoments, n: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    let a = m.cov_sq / nf + m.var_y * m.var_z;
    let b = a / (nf * nf) + 2.0 * (nf - 1.0) / nf.powi(3) * m.cov_yz * m.cov_yz;
    let c = a / nf;
    (a, b, c)
}

/// `C[V^[Y], V^[Z]]` for unbiased sample variances over an `n`-sample.
pub fn sample_variance_covariance(m: &JointMoments, n: usize) -> f64 {
    let nf = n as f64;
    m.cov_sq / nf + 2.0 / (nf * (nf - 1.0)) * m.cov_yz * m.cov_yz
}
