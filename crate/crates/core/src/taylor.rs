//! Taylor polynomial surrogates around the input mean, and the piecewise
//! first-order surrogate of the heat benchmark.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatbench::{amplitude_g, HeatBenchmark, LevelHierarchy};
use crate::sampling::InputSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaylorOrder {
    First,
    Second,
}

/// Where the derivatives at the center come from.
#[derive(Debug, Clone)]
pub enum DerivativeSource {
    Analytic {
        jacobian: Vec<f64>,
        /// Required for second order.
        hessian: Option<Vec<Vec<f64>>>,
    },
    /// Central differences with per-coordinate steps.
    FiniteDifference {
        jacobian_steps: Vec<f64>,
        hessian_steps: Vec<f64>,
    },
}

impl DerivativeSource {
    /// Central differences with steps `1e-6` (gradient) and `1e-4` (Hessian)
    /// times each interval width.
    pub fn central(space: &InputSpace) -> Self {
        let widths: Vec<f64> = space.bounds().iter().map(|(a, b)| b - a).collect();
        DerivativeSource::FiniteDifference {
            jacobian_steps: widths.iter().map(|w| 1e-6 * w).collect(),
            hessian_steps: widths.iter().map(|w| 1e-4 * w).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorSurrogate {
    pub order: TaylorOrder,
    pub center: Vec<f64>,
    pub value: f64,
    pub jacobian: Vec<f64>,
    pub hessian: Option<Vec<Vec<f64>>>,
    /// Componentwise input variances.
    pub variances: Vec<f64>,
}

impl TaylorSurrogate {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.center.len();
        let mut v = self.value;
        for i in 0..d {
            v += self.jacobian[i] * (x[i] - self.center[i]);
        }
        if let (TaylorOrder::Second, Some(h)) = (self.order, &self.hessian) {
            let mut q = 0.0;
            for i in 0..d {
                let di = x[i] - self.center[i];
                for j in 0..d {
                    q += di * h[i][j] * (x[j] - self.center[j]);
                }
            }
            v += 0.5 * q;
        }
        v
    }

    pub fn mean(&self) -> f64 {
        t_moments(self).0
    }

    pub fn variance(&self) -> f64 {
        t_moments(self).1
    }
}

/// Taylor surrogate of `f` around `center`.
pub fn t_fit<F: Fn(&[f64]) -> f64>(
    f: F,
    center: &[f64],
    variances: &[f64],
    order: TaylorOrder,
    source: &DerivativeSource,
) -> Result<TaylorSurrogate> {
    let d = center.len();
    if variances.len() != d || variances.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidConfig("input variances must be nonnegative, one per dimension".into()));
    }
    let value = f(center);
    if !value.is_finite() {
        return Err(Error::NonFiniteDerivative(0));
    }
    let (jacobian, hessian) = match source {
        DerivativeSource::Analytic { jacobian, hessian } => {
            if jacobian.len() != d {
                return Err(Error::InvalidConfig("jacobian length differs from dimension".into()));
            }
            let hessian = match order {
                TaylorOrder::First => None,
                TaylorOrder::Second => {
                    let h = hessian
                        .clone()
                        .ok_or_else(|| Error::InvalidConfig("second order needs a hessian".into()))?;
                    if h.len() != d || h.iter().any(|r| r.len() != d) {
                        return Err(Error::InvalidConfig("hessian shape differs from dimension".into()));
                    }
                    Some(symmetrize(h))
                }
            };
            (jacobian.clone(), hessian)
        }
        DerivativeSource::FiniteDifference {
            jacobian_steps,
            hessian_steps,
        } => {
            let jac = fd_gradient(&f, center, jacobian_steps);
            let hes = match order {
                TaylorOrder::First => None,
                TaylorOrder::Second => Some(fd_hessian(&f, center, value, hessian_steps)),
            };
            (jac, hes)
        }
    };
    if let Some(i) = jacobian.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDerivative(i));
    }
    if let Some(h) = &hessian {
        if let Some(i) = h.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteDerivative(i));
        }
    }
    Ok(TaylorSurrogate {
        order,
        center: center.to_vec(),
        value,
        jacobian,
        hessian,
        variances: variances.to_vec(),
    })
}

fn symmetrize(mut h: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let d = h.len();
    for i in 0..d {
        for j in i + 1..d {
            let m = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = m;
            h[j][i] = m;
        }
    }
    h
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, c: &[f64], steps: &[f64]) -> Vec<f64> {
    let mut x = c.to_vec();
    (0..c.len())
        .map(|i| {
            let h = steps[i];
            x[i] = c[i] + h;
            let up = f(&x);
            x[i] = c[i] - h;
            let down = f(&x);
            x[i] = c[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, c: &[f64], f0: f64, steps: &[f64]) -> Vec<Vec<f64>> {
    let d = c.len();
    let mut x = c.to_vec();
    let mut h = vec![vec![0.0; d]; d];
    for i in 0..d {
        let hi = steps[i];
        x[i] = c[i] + hi;
        let up = f(&x);
        x[i] = c[i] - hi;
        let down = f(&x);
        x[i] = c[i];
        h[i][i] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in i + 1..d {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                x[i] = c[i] + si * hi;
                x[j] = c[j] + sj * hj;
                let v = f(&x);
                x[i] = c[i];
                x[j] = c[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

/// `(mean, variance)` of a Taylor surrogate.
///
/// The second-order variance is the closed form for independent inputs with
/// zero excess kurtosis; it is not exact for bounded inputs.
pub fn t_moments(s: &TaylorSurrogate) -> (f64, f64) {
    let d = s.center.len();
    let sig = &s.variances;
    let linear: f64 = (0..d).map(|i| s.jacobian[i] * s.jacobian[i] * sig[i]).sum();
    match (s.order, &s.hessian) {
        (TaylorOrder::Second, Some(h)) => {
            let shift: f64 = (0..d).map(|i| h[i][i] * sig[i]).sum();
            let mut quad = 0.0;
            for i in 0..d {
                for j in 0..d {
                    quad += h[i][j] * h[i][j] * sig[i] * sig[j];
                }
            }
            (s.value + 0.5 * shift, linear + 0.5 * quad)
        }
        _ => (s.value, linear),
    }
}

/// First-order surrogate of one benchmark level around the input mean.
///
/// `f_l` is not differentiable where `x5`, `x6` or `x7` vanish, which is the
/// mean of those inputs; the one-sided slopes there make their terms depend
/// on `|x_i|` instead of `x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseT1 {
    pub level: usize,
    pub center: Vec<f64>,
    pub value: f64,
    /// Slopes in `x1..x4`; those of `x2` and `x3` are zero.
    pub slopes: [f64; 4],
    /// Common slope of `|x5|`, `|x6|`, `|x7|`.
    pub abs_slope: f64,
    mean: f64,
    variance: f64,
}

impl PiecewiseT1 {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.value;
        for i in 0..4 {
            v += self.slopes[i] * (x[i] - self.center[i]);
        }
        v + self.abs_slope * (x[4].abs() + x[5].abs() + x[6].abs())
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Builds the piecewise first-order surrogate of level `level`.
pub fn heat_t1(bench: &HeatBenchmark, level: usize) -> Result<PiecewiseT1> {
    if level >= bench.n_levels() {
        return Err(Error::LevelOutOfRange {
            level,
            levels: bench.n_levels(),
        });
    }
    let cfg = bench.config();
    let center = cfg.center().to_vec();
    let q = bench.quadrature(level);
    let mut decay = vec![0.0; cfg.modes];
    bench.decay(center[3], &mut decay);
    let g0 = amplitude_g(&center);
    let t = cfg.final_time;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
    for k in 0..cfg.modes {
        let kk = ((k + 1) * (k + 1)) as f64;
        s1 += q.q2[k] * q.s[k] * decay[k];
        s2 += q.q1[k] * q.s[k] * decay[k];
        s4 += kk * q.q1[k] * q.s[k] * decay[k];
    }
    // d I / d x1 = 3.5 at the center; d G / d|x_i| = 200 there.
    let slope1 = 7.0 * s1;
    let slope4 = -2.0 * g0 * pi2 * t * s4;
    let abs_slope = 400.0 * s2;
    let value = bench.eval(level, &center);

    let space = bench.space();
    let var = space.variances();
    let mut mean = value;
    let mut variance = slope1 * slope1 * var[0] + slope4 * slope4 * var[3];
    for &(a, b) in &space.bounds()[4..7] {
        let (m1, m2) = abs_moments(a, b);
        mean += abs_slope * m1;
        variance += abs_slope * abs_slope * (m2 - m1 * m1);
    }
    Ok(PiecewiseT1 {
        level,
        center,
        value,
        slopes: [slope1, 0.0, 0.0, slope4],
        abs_slope,
        mean,
        variance,
    })
}

/// `(E|X|, E X^2)` for `X ~ U[a, b]`.
fn abs_moments(a: f64, b: f64) -> (f64, f64) {
    let w = b - a;
    let m2 = (a * a + a * b + b * b) / 3.0;
    let m1 = if a >= 0.0 {
        0.5 * (a + b)
    } else if b <= 0.0 {
        -0.5 * (a + b)
    } else {
        (a * a + b * b) / (2.0 * w)
    };
    (m1, m2)
}
