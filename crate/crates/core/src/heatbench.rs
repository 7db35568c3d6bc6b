//! Uncertain 1D heat equation: a hierarchy of spectral approximations of the
//! rod-integrated temperature at final time.
//!
//! Inputs are `X1..X3 ~ U[-pi, pi]`, `X4 = nu ~ U[nu_min, nu_max]` and
//! `X5..X7 ~ U[-1, 1]`. Level `l` truncates the Fourier series to `K` modes
//! and evaluates every spatial integral with an `N_l`-node trapezoid rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::InputSpace;

/// An ordered family of simulators `f_0, ..., f_L` over a common input space.
pub trait LevelHierarchy: Sync {
    fn n_levels(&self) -> usize;

    fn space(&self) -> &InputSpace;

    /// Cost of one evaluation of `f_level`.
    fn cost(&self, level: usize) -> f64;

    /// Cost of one correction sample `f_l - f_{l-1}` (with `C_{-1} = 0`).
    fn correction_cost(&self, level: usize) -> f64 {
        if level == 0 {
            self.cost(0)
        } else {
            self.cost(level) + self.cost(level - 1)
        }
    }

    /// Evaluates `f_level` at `x`. Panics if `level` is out of range.
    fn eval(&self, level: usize, x: &[f64]) -> f64;

    /// `(f_level(x), f_{level-1}(x))`, the second entry being 0 at level 0.
    fn eval_pair(&self, level: usize, x: &[f64]) -> (f64, f64) {
        let fine = self.eval(level, x);
        let coarse = if level == 0 { 0.0 } else { self.eval(level - 1, x) };
        (fine, coarse)
    }

    fn finest(&self) -> usize {
        self.n_levels() - 1
    }
}

/// Node counts and normalized costs per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub nodes: Vec<usize>,
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatConfig {
    #[serde(rename = "K")]
    pub modes: usize,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub levels: LevelSpec,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            modes: 21,
            final_time: 0.5,
            nu_min: 0.001,
            nu_max: 0.009,
            levels: LevelSpec {
                nodes: vec![15, 30, 60, 120],
                costs: vec![0.125, 0.25, 0.5, 1.0],
            },
        }
    }
}

impl HeatConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.modes == 0 {
            return bad("K must be at least 1");
        }
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return bad("T must be positive");
        }
        if !(self.nu_min > 0.0 && self.nu_min < self.nu_max && self.nu_max.is_finite()) {
            return bad("diffusivity bounds must satisfy 0 < nu_min < nu_max");
        }
        let nodes = &self.levels.nodes;
        if nodes.is_empty() {
            return bad("at least one level required");
        }
        if nodes[0] < 2 || nodes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("level node counts must be >= 2 and strictly increasing");
        }
        if self.levels.costs.len() != nodes.len() {
            return bad("one cost per level required");
        }
        if self.levels.costs.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return bad("level costs must be positive");
        }
        Ok(())
    }

    pub fn space(&self) -> InputSpace {
        InputSpace::new(vec![
            (-PI, PI),
            (-PI, PI),
            (-PI, PI),
            (self.nu_min, self.nu_max),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 1.0),
        ])
        .expect("benchmark bounds are valid")
    }

    /// Input mean `(0, 0, 0, (nu_min + nu_max) / 2, 0, 0, 0)`.
    pub fn center(&self) -> [f64; 7] {
        [0.0, 0.0, 0.0, 0.5 * (self.nu_min + self.nu_max), 0.0, 0.0, 0.0]
    }

    /// Mean of `exp(-nu k^2 pi^2 T)` over the diffusivity interval.
    pub fn mean_decay(&self, k: usize) -> f64 {
        let a = (k * k) as f64 * PI * PI * self.final_time;
        ((-self.nu_min * a).exp() - (-self.nu_max * a).exp()) / (a * (self.nu_max - self.nu_min))
    }
}

/// `H_k`, the expectation of `2/(k pi) exp(-nu k^2 pi^2 T)`.
pub fn h_coefficient(cfg: &HeatConfig, k: usize) -> f64 {
    2.0 / (k as f64 * PI) * cfg.mean_decay(k)
}

/// Expectation of the exact (untruncated, continuous) output.
pub fn exact_expectation(cfg: &HeatConfig) -> Result<f64> {
    if !(cfg.nu_max > cfg.nu_min) || !(cfg.final_time > 0.0) {
        return Err(Error::InvalidConfig(
            "diffusivity interval must have positive width".into(),
        ));
    }
    let h = |k| h_coefficient(cfg, k);
    Ok(50.0 * h(1) + 49.0 / 4.0 * (h(3) + 50.0 * h(9) + 50.0 * h(21)))
}

/// `C_l + C_{l-1}` with `C_{-1} = 0`.
pub fn correction_cost(cfg: &HeatConfig, level: usize) -> Result<f64> {
    let costs = &cfg.levels.costs;
    if level >= costs.len() {
        return Err(Error::LevelOutOfRange {
            level,
            levels: costs.len(),
        });
    }
    Ok(costs[level] + if level > 0 { costs[level - 1] } else { 0.0 })
}

/// Mode-wise quadrature sums of one level.
#[derive(Debug, Clone)]
pub struct LevelQuadrature {
    pub nodes: usize,
    /// `sum_i w_i sin(k pi x_i) F1(x_i)`
    pub q1: Vec<f64>,
    /// `sum_i w_i sin(k pi x_i) F2(x_i)`
    pub q2: Vec<f64>,
    /// `sum_i w_i sin(k pi x_i)`
    pub s: Vec<f64>,
}

impl LevelQuadrature {
    fn new(nodes: usize, modes: usize) -> Self {
        let dx = 1.0 / (nodes - 1) as f64;
        let mut q1 = vec![0.0; modes];
        let mut q2 = vec![0.0; modes];
        let mut s = vec![0.0; modes];
        for i in 0..nodes {
            let x = i as f64 * dx;
            let w = if i == 0 || i == nodes - 1 { 0.5 * dx } else { dx };
            let f1 = (PI * x).sin();
            let f2 = (2.0 * PI * x).sin()
                + (3.0 * PI * x).sin()
                + 50.0 * ((9.0 * PI * x).sin() + (21.0 * PI * x).sin());
            for k in 0..modes {
                let sk = w * ((k + 1) as f64 * PI * x).sin();
                q1[k] += sk * f1;
                q2[k] += sk * f2;
                s[k] += sk;
            }
        }
        Self { nodes, q1, q2, s }
    }
}

/// `G(x) = 50 (4|x5| - 1)(4|x6| - 1)(4|x7| - 1)`.
pub fn amplitude_g(x: &[f64]) -> f64 {
    50.0 * (4.0 * x[4].abs() - 1.0) * (4.0 * x[5].abs() - 1.0) * (4.0 * x[6].abs() - 1.0)
}

/// `I(x) = 3.5 (sin x1 + 7 sin^2 x2 + 0.1 x3^4 sin x1)`.
pub fn amplitude_i(x: &[f64]) -> f64 {
    let s1 = x[0].sin();
    let s2 = x[1].sin();
    3.5 * (s1 + 7.0 * s2 * s2 + 0.1 * x[2].powi(4) * s1)
}

/// The benchmark hierarchy with precomputed quadrature sums.
#[derive(Debug, Clone)]
pub struct HeatBenchmark {
    cfg: HeatConfig,
    space: InputSpace,
    levels: Vec<LevelQuadrature>,
    /// `k^2 pi^2 T` for `k = 1..K`.
    rates: Vec<f64>,
}

impl HeatBenchmark {
    pub fn new(cfg: HeatConfig) -> Result<Self> {
        cfg.validate()?;
        let levels = cfg
            .levels
            .nodes
            .iter()
            .map(|&n| LevelQuadrature::new(n, cfg.modes))
            .collect();
        let rates = (1..=cfg.modes)
            .map(|k| (k * k) as f64 * PI * PI * cfg.final_time)
            .collect();
        Ok(Self {
            space: cfg.space(),
            cfg,
            levels,
            rates,
        })
    }

    pub fn config(&self) -> &HeatConfig {
        &self.cfg
    }

    pub fn quadrature(&self, level: usize) -> &LevelQuadrature {
        &self.levels[level]
    }

    pub fn decay(&self, nu: f64, out: &mut [f64]) {
        for (o, &r) in out.iter_mut().zip(&self.rates) {
            *o = (-nu * r).exp();
        }
    }

    fn eval_with_decay(&self, level: usize, g: f64, i: f64, decay: &[f64]) -> f64 {
        let q = &self.levels[level];
        let mut acc = 0.0;
        for k in 0..self.cfg.modes {
            acc += (g * q.q1[k] + i * q.q2[k]) * q.s[k] * decay[k];
        }
        2.0 * acc
    }

    /// `f_level(x)`, checking the level index.
    pub fn evaluate_level(&self, level: usize, x: &[f64]) -> Result<f64> {
        if level >= self.levels.len() {
            return Err(Error::LevelOutOfRange {
                level,
                levels: self.levels.len(),
            });
        }
        Ok(self.eval(level, x))
    }

    /// Exact `E[f_level]`, with quadrature and truncation errors included.
    pub fn level_expectation(&self, level: usize) -> f64 {
        let q = &self.levels[level];
        (0..self.cfg.modes)
            .map(|k| {
                2.0 * (50.0 * q.q1[k] + 49.0 / 4.0 * q.q2[k]) * q.s[k] * self.cfg.mean_decay(k + 1)
            })
            .sum()
    }

    pub fn exact_expectation(&self) -> f64 {
        exact_expectation(&self.cfg).expect("validated config")
    }
}

impl LevelHierarchy for HeatBenchmark {
    fn n_levels(&self) -> usize {
        self.levels.len()
    }

    fn space(&self) -> &InputSpace {
        &self.space
    }

    fn cost(&self, level: usize) -> f64 {
        self.cfg.levels.costs[level]
    }

    fn eval(&self, level: usize, x: &[f64]) -> f64 {
        let (g, i) = (amplitude_g(x), amplitude_i(x));
        self.with_decay(x[3], |d| self.eval_with_decay(level, g, i, d))
    }

    fn eval_pair(&self, level: usize, x: &[f64]) -> (f64, f64) {
        let (g, i) = (amplitude_g(x), amplitude_i(x));
        self.with_decay(x[3], |d| {
            let fine = self.eval_with_decay(level, g, i, d);
            let coarse = if level == 0 {
                0.0
            } else {
                self.eval_with_decay(level - 1, g, i, d)
            };
            (fine, coarse)
        })
    }
}

impl HeatBenchmark {
    fn with_decay<R>(&self, nu: f64, f: impl FnOnce(&[f64]) -> R) -> R {
        let modes = self.cfg.modes;
        if modes <= 64 {
            let mut buf = [0.0; 64];
            self.decay(nu, &mut buf[..modes]);
            f(&buf[..modes])
        } else {
            let mut buf = vec![0.0; modes];
            self.decay(nu, &mut buf);
            f(&buf)
        }
    }
}

/// A hierarchy built from plain closures; handy for tests and toy problems.
pub struct FnHierarchy<F> {
    space: InputSpace,
    costs: Vec<f64>,
    f: F,
}

impl<F> FnHierarchy<F>
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    pub fn new(space: InputSpace, costs: Vec<f64>, f: F) -> Self {
        assert!(!costs.is_empty(), "at least one level required");
        Self { space, costs, f }
    }
}

impl<F> LevelHierarchy for FnHierarchy<F>
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    fn n_levels(&self) -> usize {
        self.costs.len()
    }

    fn space(&self) -> &InputSpace {
        &self.space
    }

    fn cost(&self, level: usize) -> f64 {
        self.costs[level]
    }

    fn eval(&self, level: usize, x: &[f64]) -> f64 {
        assert!(level < self.costs.len(), "level out of range");
        (self.f)(level, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_expectation_value() {
        let cfg = HeatConfig::default();
        let e = exact_expectation(&cfg).unwrap();
        assert!((e - 41.98).abs() < 0.01, "{e}");
        assert!((h_coefficient(&cfg, 1) - 0.6212).abs() < 1e-4);
    }

    #[test]
    fn degenerate_interval_rejected() {
        let cfg = HeatConfig {
            nu_max: 0.001,
            ..HeatConfig::default()
        };
        assert!(exact_expectation(&cfg).is_err());
        assert!(HeatBenchmark::new(cfg).is_err());
    }

    #[test]
    fn correction_costs() {
        let cfg = HeatConfig::default();
        assert_eq!(correction_cost(&cfg, 0).unwrap(), 0.125);
        assert_eq!(correction_cost(&cfg, 1).unwrap(), 0.375);
        assert_eq!(correction_cost(&cfg, 3).unwrap(), 1.5);
        assert!(correction_cost(&cfg, 4).is_err());
    }

    #[test]
    fn zero_initial_condition() {
        let b = HeatBenchmark::new(HeatConfig::default()).unwrap();
        let x = [0.0, 0.0, 0.0, 0.005, 0.25, 0.25, 0.25];
        for l in 0..4 {
            assert_eq!(b.eval(l, &x), 0.0);
        }
        assert!(b.evaluate_level(4, &x).is_err());
    }

    #[test]
    fn pair_matches_single_evaluations() {
        let b = HeatBenchmark::new(HeatConfig::default()).unwrap();
        let x = [0.3, -1.2, 2.0, 0.004, 0.7, -0.2, 0.9];
        for l in 0..4 {
            let (f, c) = b.eval_pair(l, &x);
            assert_eq!(f, b.eval(l, &x));
            assert_eq!(c, if l == 0 { 0.0 } else { b.eval(l - 1, &x) });
        }
    }

    #[test]
    fn continuous_limit_matches_closed_form_integrals() {
        // With many nodes the quadrature sums approach 1/2 (k=1) and 2/(k pi).
        let q = LevelQuadrature::new(20_001, 21);
        assert!((q.q1[0] - 0.5).abs() < 1e-8);
        assert!((q.s[2] - 2.0 / (3.0 * PI)).abs() < 1e-8);
        assert!(q.s[1].abs() < 1e-12);
    }
}
