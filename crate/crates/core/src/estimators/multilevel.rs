//! Single-level and multilevel estimators with surrogate control variates,
//! fixed-allocation runs and the adaptive sequential driver.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controls::{BankScratch, ControlBank, SharedControl};
use super::cv::{solve_controls, CvSolution, Statistic};
use super::stats::Comoments;
use crate::error::{Error, Result};
use crate::heatbench::LevelHierarchy;
use crate::pce::pc_covariance;
use crate::sampling::{fill_uniform, Purpose, RngStream};

/// Estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "CV[PC]")]
    CvPc,
    #[serde(rename = "CV[T1]")]
    CvT1,
    #[serde(rename = "CV[PC+T1]")]
    CvPcT1,
    #[serde(rename = "MLMC")]
    Mlmc,
    #[serde(rename = "MLCV")]
    Mlcv,
    #[serde(rename = "MLMC-CV")]
    MlmcCv,
    #[serde(rename = "MLMC-MLCV")]
    MlmcMlcv,
    #[serde(rename = "MLMC-CV[0]")]
    MlmcCv0,
    #[serde(rename = "MLMC-MLCV[0]")]
    MlmcMlcv0,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Mc,
        Method::CvPc,
        Method::CvT1,
        Method::CvPcT1,
        Method::Mlmc,
        Method::Mlcv,
        Method::MlmcCv,
        Method::MlmcMlcv,
        Method::MlmcCv0,
        Method::MlmcMlcv0,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Mc => "MC",
            Method::CvPc => "CV[PC]",
            Method::CvT1 => "CV[T1]",
            Method::CvPcT1 => "CV[PC+T1]",
            Method::Mlmc => "MLMC",
            Method::Mlcv => "MLCV",
            Method::MlmcCv => "MLMC-CV",
            Method::MlmcMlcv => "MLMC-MLCV",
            Method::MlmcCv0 => "MLMC-CV[0]",
            Method::MlmcMlcv0 => "MLMC-MLCV[0]",
        }
    }

    /// True for the estimators that sample every level.
    pub fn is_multilevel(self) -> bool {
        matches!(
            self,
            Method::Mlmc | Method::MlmcCv | Method::MlmcMlcv | Method::MlmcCv0 | Method::MlmcMlcv0
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == key)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Surrogates available to the estimators, indexed by level.
#[derive(Clone, Default)]
pub struct ControlSuite {
    /// `g_l`, surrogate of `f_l`.
    pub g: Vec<Option<SharedControl>>,
    /// `h_l`, surrogate of `f_l - f_{l-1}`; entry 0 is unused.
    pub h: Vec<Option<SharedControl>>,
    /// `g~_{l-1} = g_l - h_l`, stored at index `l - 1`.
    pub g_tilde: Vec<Option<SharedControl>>,
    /// Surrogate of the finest level for the single-level estimators.
    pub finest_pc: Option<SharedControl>,
    /// Taylor surrogate of the finest level.
    pub finest_taylor: Option<SharedControl>,
}

impl ControlSuite {
    fn pick(list: &[Option<SharedControl>], i: usize, name: &str) -> Result<SharedControl> {
        list.get(i)
            .and_then(|c| c.clone())
            .ok_or_else(|| Error::MissingSurrogate(format!("{name}_{i}")))
    }

    fn g(&self, l: usize) -> Result<SharedControl> {
        Self::pick(&self.g, l, "g")
    }

    fn h(&self, l: usize) -> Result<SharedControl> {
        Self::pick(&self.h, l, "h")
    }

    fn g_tilde(&self, l: usize) -> Result<SharedControl> {
        Self::pick(&self.g_tilde, l, "g_tilde")
    }
}

/// Per-sample control feature built from the bank outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Feature {
    /// `Z`, for the expectation.
    Value(usize),
    /// `(Z - mu_Z)^2`, for the variance.
    CenteredSquare(usize),
    /// `(Z - mu_Z)^2 - (Z~ - mu_Z~)^2`, for a variance correction.
    SquareDifference(usize, usize),
}

/// How the control parameters are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    /// From the estimation sample itself, re-estimated as it grows.
    SameSample,
    /// Once, from an independent pilot sample of the given size per level.
    Pilot(usize),
}

/// One level of an estimator: which simulators and controls to sample.
pub struct LevelPlan {
    pub level: usize,
    /// Whether `f_{l-1}` is subtracted.
    pub correction: bool,
    /// Cost of one sample.
    pub cost: f64,
    bank: ControlBank,
    features: Vec<Feature>,
    tau: Vec<f64>,
    means: Vec<f64>,
    exact_sigma: Option<DMatrix<f64>>,
}

impl LevelPlan {
    fn new(
        level: usize,
        correction: bool,
        cost: f64,
        models: Vec<SharedControl>,
        features: Vec<Feature>,
    ) -> Result<Self> {
        let means: Vec<f64> = models.iter().map(|m| m.mean()).collect();
        let vars: Vec<f64> = models.iter().map(|m| m.variance()).collect();
        let tau = features
            .iter()
            .map(|f| match *f {
                Feature::Value(i) => means[i],
                Feature::CenteredSquare(i) => vars[i],
                Feature::SquareDifference(a, b) => vars[a] - vars[b],
            })
            .collect();
        Ok(Self {
            level,
            correction,
            cost,
            bank: ControlBank::new(models)?,
            features,
            tau,
            means,
            exact_sigma: None,
        })
    }

    /// Closed-form control covariance, available for the expectation when
    /// every control is a polynomial chaos expansion.
    fn exact_covariance(&self) -> Result<Option<DMatrix<f64>>> {
        let models = self.bank.models();
        let mut pcs = Vec::new();
        for f in &self.features {
            let Feature::Value(i) = *f else { return Ok(None) };
            match models[i].as_pc() {
                Some(pc) => pcs.push(pc),
                None => return Ok(None),
            }
        }
        if pcs.is_empty() {
            return Ok(None);
        }
        let m = pcs.len();
        let mut s = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = pc_covariance(pcs[i], pcs[j])?;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(Some(s))
    }

    pub fn controls(&self) -> usize {
        self.features.len()
    }
}

/// A fully resolved estimator for one hierarchy and statistic.
pub struct MethodPlan {
    pub method: Method,
    pub statistic: Statistic,
    pub levels: Vec<LevelPlan>,
}

fn value_features(n: usize) -> Vec<Feature> {
    (0..n).map(Feature::Value).collect()
}

fn square_features(n: usize) -> Vec<Feature> {
    (0..n).map(Feature::CenteredSquare).collect()
}

impl MethodPlan {
    pub fn new<H: LevelHierarchy + ?Sized>(
        method: Method,
        hierarchy: &H,
        suite: &ControlSuite,
        statistic: Statistic,
    ) -> Result<Self> {
        let n_levels = hierarchy.n_levels();
        let fin = n_levels - 1;
        let expectation = statistic == Statistic::Expectation;
        let single = |models: Vec<SharedControl>| -> Result<Vec<LevelPlan>> {
            let k = models.len();
            let features = if expectation { value_features(k) } else { square_features(k) };
            Ok(vec![LevelPlan::new(fin, false, hierarchy.cost(fin), models, features)?])
        };
        // Level-0 plan with the given controls and level-l plans built by `upper`.
        let multi = |base: Vec<SharedControl>,
                     upper: &dyn Fn(usize) -> Result<(Vec<SharedControl>, Vec<Feature>)>|
         -> Result<Vec<LevelPlan>> {
            let k = base.len();
            let features = if expectation { value_features(k) } else { square_features(k) };
            let mut levels = vec![LevelPlan::new(0, false, hierarchy.cost(0), base, features)?];
            for l in 1..n_levels {
                let (models, features) = upper(l)?;
                levels.push(LevelPlan::new(
                    l,
                    true,
                    hierarchy.correction_cost(l),
                    models,
                    features,
                )?);
            }
            Ok(levels)
        };
        // Controls of the correction `l` built from level `m`'s surrogates.
        let correction_controls = |ms: &[usize]| -> Result<(Vec<SharedControl>, Vec<Feature>)> {
            if expectation {
                let models = ms.iter().map(|&m| suite.h(m)).collect::<Result<Vec<_>>>()?;
                Ok((models, value_features(ms.len())))
            } else {
                let mut models = Vec::new();
                let mut features = Vec::new();
                for &m in ms {
                    models.push(suite.g(m)?);
                    models.push(suite.g_tilde(m - 1)?);
                    features.push(Feature::SquareDifference(models.len() - 2, models.len() - 1));
                }
                Ok((models, features))
            }
        };
        let all_g = || (0..n_levels).map(|l| suite.g(l)).collect::<Result<Vec<_>>>();
        let levels = match method {
            Method::Mc => single(vec![])?,
            Method::CvPc => single(vec![suite
                .finest_pc
                .clone()
                .ok_or_else(|| Error::MissingSurrogate("finest-level PC".into()))?])?,
            Method::CvT1 => single(vec![suite
                .finest_taylor
                .clone()
                .ok_or_else(|| Error::MissingSurrogate("finest-level Taylor".into()))?])?,
            Method::CvPcT1 => single(vec![
                suite
                    .finest_pc
                    .clone()
                    .ok_or_else(|| Error::MissingSurrogate("finest-level PC".into()))?,
                suite
                    .finest_taylor
                    .clone()
                    .ok_or_else(|| Error::MissingSurrogate("finest-level Taylor".into()))?,
            ])?,
            Method::Mlcv => single(all_g()?)?,
            Method::Mlmc => multi(vec![], &|_| Ok((vec![], vec![])))?,
            Method::MlmcCv => multi(vec![suite.g(0)?], &|l| correction_controls(&[l]))?,
            Method::MlmcMlcv => {
                let ms: Vec<usize> = (1..n_levels).collect();
                multi(all_g()?, &|_| correction_controls(&ms))?
            }
            Method::MlmcCv0 => multi(vec![suite.g(0)?], &|_| Ok((vec![], vec![])))?,
            Method::MlmcMlcv0 => {
                let base = if n_levels > 1 { vec![suite.g(0)?, suite.g(1)?] } else { vec![suite.g(0)?] };
                multi(base, &|_| correction_controls(&[1]))?
            }
        };
        Ok(Self {
            method,
            statistic,
            levels,
        })
    }

    /// Solve for the control parameters with the closed-form covariance of
    /// polynomial chaos controls wherever it exists, instead of the sample
    /// covariance.
    pub fn with_exact_covariance(mut self) -> Result<Self> {
        if self.statistic == Statistic::Expectation {
            for l in &mut self.levels {
                l.exact_sigma = l.exact_covariance()?;
            }
        }
        Ok(self)
    }

    pub fn is_single_level(&self) -> bool {
        !self.method.is_multilevel()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.cost).collect()
    }
}

/// Samples drawn so far on one level.
struct LevelSamples {
    fine: Vec<f64>,
    coarse: Vec<f64>,
    /// Feature columns.
    phi: Vec<Vec<f64>>,
    /// Streaming moments of `(fine - coarse, phi...)`.
    moments: Comoments,
    rng: ChaCha8Rng,
    scratch: BankScratch,
    point: Vec<f64>,
    outputs: Vec<f64>,
    row: Vec<f64>,
}

impl LevelSamples {
    fn new(plan: &LevelPlan, rng: ChaCha8Rng) -> Self {
        let m = plan.features.len();
        Self {
            fine: Vec::new(),
            coarse: Vec::new(),
            phi: vec![Vec::new(); m],
            moments: Comoments::new(m + 1),
            rng,
            scratch: plan.bank.scratch(),
            point: Vec::new(),
            outputs: vec![0.0; plan.bank.len()],
            row: vec![0.0; m + 1],
        }
    }

    fn len(&self) -> usize {
        self.fine.len()
    }

    fn draw<H: LevelHierarchy + ?Sized>(&mut self, plan: &LevelPlan, hierarchy: &H, count: usize) {
        let space = hierarchy.space();
        for _ in 0..count {
            self.point.clear();
            fill_uniform(space, &mut self.rng, &mut self.point);
            let (fine, coarse) = if plan.correction {
                hierarchy.eval_pair(plan.level, &self.point)
            } else {
                (hierarchy.eval(plan.level, &self.point), 0.0)
            };
            self.fine.push(fine);
            self.coarse.push(coarse);
            if !plan.bank.is_empty() {
                plan.bank.eval_into(&mut self.scratch, &self.point, &mut self.outputs);
            }
            self.row[0] = fine - coarse;
            for (k, f) in plan.features.iter().enumerate() {
                let v = match *f {
                    Feature::Value(i) => self.outputs[i],
                    Feature::CenteredSquare(i) => (self.outputs[i] - plan.means[i]).powi(2),
                    Feature::SquareDifference(a, b) => {
                        (self.outputs[a] - plan.means[a]).powi(2) - (self.outputs[b] - plan.means[b]).powi(2)
                    }
                };
                self.phi[k].push(v);
                self.row[k + 1] = v;
            }
            self.moments.push(&self.row);
        }
    }
}

/// Raw per-level statistics before the control correction.
struct RawLevel {
    n: usize,
    correction: f64,
    variance: f64,
    control_means: Vec<f64>,
    /// Control covariance used to solve for the parameters.
    sigma: DMatrix<f64>,
    /// Sample covariance of the controls.
    sample_sigma: DMatrix<f64>,
    c: DVector<f64>,
}

fn raw_level(plan: &LevelPlan, s: &LevelSamples, statistic: Statistic) -> Result<RawLevel> {
    let n = s.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let m = plan.features.len();
    match statistic {
        Statistic::Expectation => {
            let mo = &s.moments;
            let sample_sigma = DMatrix::from_fn(m, m, |i, j| mo.cov(i + 1, j + 1));
            Ok(RawLevel {
                n,
                correction: mo.mean(0),
                variance: mo.cov(0, 0),
                control_means: (0..m).map(|i| mo.mean(i + 1)).collect(),
                sigma: plan.exact_sigma.clone().unwrap_or_else(|| sample_sigma.clone()),
                sample_sigma,
                c: DVector::from_fn(m, |i, _| mo.cov(0, i + 1)),
            })
        }
        Statistic::Variance => {
            let nf = n as f64;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / nf;
            let cov = |a: &[f64], b: &[f64]| {
                let (ma, mb) = (mean(a), mean(b));
                a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (nf - 1.0)
            };
            let (mf, mc) = (mean(&s.fine), mean(&s.coarse));
            let q: Vec<f64> = s
                .fine
                .iter()
                .zip(&s.coarse)
                .map(|(f, c)| (f - mf).powi(2) - (c - mc).powi(2))
                .collect();
            let (vf, vc, cfc) = (cov(&s.fine, &s.fine), cov(&s.coarse, &s.coarse), cov(&s.fine, &s.coarse));
            let variance = cov(&q, &q) + 2.0 / (nf - 1.0) * (vf * vf + vc * vc - 2.0 * cfc * cfc);
            let sample_sigma = DMatrix::from_fn(m, m, |i, j| cov(&s.phi[i], &s.phi[j]));
            Ok(RawLevel {
                n,
                correction: vf - vc,
                variance,
                control_means: s.phi.iter().map(|p| mean(p)).collect(),
                sigma: sample_sigma.clone(),
                sample_sigma,
                c: DVector::from_fn(m, |i, _| cov(&q, &s.phi[i])),
            })
        }
    }
}

/// Result of one level after the control correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub level: usize,
    pub n: usize,
    /// Plain Monte Carlo estimate of the level's correction.
    pub correction: f64,
    /// Control-corrected estimate.
    pub estimate: f64,
    /// Per-sample variance of the plain correction estimator.
    pub variance: f64,
    /// Per-sample variance with the controls applied.
    pub variance_cv: f64,
    pub r2: f64,
    pub alpha: Vec<f64>,
    pub dropped: Vec<usize>,
}

fn finish_level(plan: &LevelPlan, raw: RawLevel, fixed_alpha: Option<&DVector<f64>>) -> LevelEstimate {
    if plan.features.is_empty() {
        return LevelEstimate {
            level: plan.level,
            n: raw.n,
            correction: raw.correction,
            estimate: raw.correction,
            variance: raw.variance,
            variance_cv: raw.variance,
            r2: 0.0,
            alpha: vec![],
            dropped: vec![],
        };
    }
    let sol = solve_controls(raw.sigma, raw.c.clone(), raw.variance);
    let alpha = fixed_alpha.cloned().unwrap_or_else(|| sol.alpha.clone());
    // Sample variance of the controlled residual, nonnegative whatever the
    // source of the covariance used for `alpha`.
    let variance_cv = (raw.variance - 2.0 * alpha.dot(&raw.c)
        + (alpha.transpose() * &raw.sample_sigma * &alpha)[(0, 0)])
        .max(0.0);
    let shift: f64 = alpha
        .iter()
        .zip(&raw.control_means)
        .zip(&plan.tau)
        .map(|((a, u), t)| a * (u - t))
        .sum();
    let r2 = if raw.variance > 0.0 {
        (1.0 - variance_cv / raw.variance).clamp(0.0, 1.0)
    } else {
        0.0
    };
    LevelEstimate {
        level: plan.level,
        n: raw.n,
        correction: raw.correction,
        estimate: raw.correction - shift,
        variance: raw.variance,
        variance_cv,
        r2,
        alpha: alpha.iter().copied().collect(),
        dropped: sol.dropped,
    }
}

/// Optimal parameters of one level from an independent pilot sample.
fn pilot_alpha<H: LevelHierarchy + ?Sized>(
    plan: &LevelPlan,
    hierarchy: &H,
    statistic: Statistic,
    size: usize,
    seed: u64,
    replicate: u64,
) -> Result<Option<DVector<f64>>> {
    if plan.features.is_empty() {
        return Ok(None);
    }
    let rng = RngStream::keyed(seed, plan.level as u32, replicate, Purpose::Pilot).rng();
    let mut s = LevelSamples::new(plan, rng);
    s.draw(plan, hierarchy, size);
    let raw = raw_level(plan, &s, statistic)?;
    let sol: CvSolution = solve_controls(raw.sigma, raw.c, raw.variance);
    Ok(Some(sol.alpha))
}

/// State of the adaptive driver after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: Vec<usize>,
    pub consumed: f64,
    pub variances_cv: Vec<f64>,
    /// Level chosen for the next increment, if the loop continues.
    pub selected: Option<usize>,
    pub increment: usize,
}

/// Outcome of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub statistic: Statistic,
    pub budget: f64,
    pub consumed: f64,
    pub estimate: f64,
    pub levels: Vec<LevelEstimate>,
    pub trace: Vec<TraceStep>,
}

impl RunReport {
    pub fn n(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.n).collect()
    }

    /// Fraction of the consumed budget spent per level.
    pub fn cost_shares(&self, costs: &[f64]) -> Vec<f64> {
        let spent: Vec<f64> = self.levels.iter().zip(costs).map(|(l, c)| l.n as f64 * c).collect();
        let total: f64 = spent.iter().sum();
        spent.iter().map(|s| s / total).collect()
    }
}

/// Parameters of the adaptive driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverConfig {
    pub n_init: usize,
    /// Inflation factor, greater than 1.
    pub inflation: f64,
    pub alpha: AlphaMode,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            n_init: 30,
            inflation: 1.1,
            alpha: AlphaMode::SameSample,
        }
    }
}

struct RunState<'p> {
    plan: &'p MethodPlan,
    samples: Vec<LevelSamples>,
    alphas: Vec<Option<DVector<f64>>>,
}

impl<'p> RunState<'p> {
    fn new<H: LevelHierarchy + ?Sized>(
        plan: &'p MethodPlan,
        hierarchy: &H,
        alpha: AlphaMode,
        seed: u64,
        replicate: u64,
    ) -> Result<Self> {
        let samples = plan
            .levels
            .iter()
            .map(|lp| {
                let rng = RngStream::keyed(seed, lp.level as u32, replicate, Purpose::Estimation).rng();
                LevelSamples::new(lp, rng)
            })
            .collect();
        let alphas = match alpha {
            AlphaMode::SameSample => vec![None; plan.levels.len()],
            AlphaMode::Pilot(size) => plan
                .levels
                .iter()
                .map(|lp| pilot_alpha(lp, hierarchy, plan.statistic, size, seed, replicate))
                .collect::<Result<_>>()?,
        };
        Ok(Self { plan, samples, alphas })
    }

    fn draw<H: LevelHierarchy + ?Sized>(&mut self, hierarchy: &H, counts: &[usize]) {
        for ((s, lp), &k) in self.samples.iter_mut().zip(&self.plan.levels).zip(counts) {
            if k > 0 {
                s.draw(lp, hierarchy, k);
            }
        }
    }

    fn consumed(&self) -> f64 {
        self.samples.iter().zip(&self.plan.levels).map(|(s, lp)| s.len() as f64 * lp.cost).sum()
    }

    fn levels(&self) -> Result<Vec<LevelEstimate>> {
        self.plan
            .levels
            .iter()
            .zip(&self.samples)
            .zip(&self.alphas)
            .map(|((lp, s), a)| Ok(finish_level(lp, raw_level(lp, s, self.plan.statistic)?, a.as_ref())))
            .collect()
    }
}

fn assemble(plan: &MethodPlan, budget: f64, consumed: f64, levels: Vec<LevelEstimate>, trace: Vec<TraceStep>) -> RunReport {
    RunReport {
        method: plan.method,
        statistic: plan.statistic,
        budget,
        consumed,
        estimate: levels.iter().map(|l| l.estimate).sum(),
        levels,
        trace,
    }
}

/// Runs `plan` with prescribed per-level sample sizes.
pub fn estimate_fixed<H: LevelHierarchy + ?Sized>(
    plan: &MethodPlan,
    hierarchy: &H,
    n: &[usize],
    alpha: AlphaMode,
    seed: u64,
    replicate: u64,
) -> Result<RunReport> {
    if n.len() != plan.levels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} sample sizes given for {} levels",
            n.len(),
            plan.levels.len()
        )));
    }
    let mut state = RunState::new(plan, hierarchy, alpha, seed, replicate)?;
    state.draw(hierarchy, n);
    let levels = state.levels()?;
    let consumed = state.consumed();
    Ok(assemble(plan, consumed, consumed, levels, vec![]))
}

/// Runs `plan` under a budget.
///
/// Single-level estimators spend `floor(budget / cost)` samples. Multilevel
/// ones follow the sequential scheme: start from `n_init` samples per level,
/// then repeatedly inflate the level with the largest variance reduction per
/// unit cost until the consumed budget exceeds `budget`.
pub fn adaptive_run<H: LevelHierarchy + ?Sized>(
    plan: &MethodPlan,
    hierarchy: &H,
    budget: f64,
    cfg: &DriverConfig,
    seed: u64,
    replicate: u64,
) -> Result<RunReport> {
    if cfg.n_init < 2 || !(cfg.inflation > 1.0) {
        return Err(Error::InvalidConfig("n_init must be at least 2 and the inflation factor above 1".into()));
    }
    let costs = plan.costs();
    if plan.is_single_level() {
        let n = (budget / costs[0]).floor() as usize;
        if n < 2 {
            return Err(Error::BudgetTooSmall {
                budget,
                initial: 2.0 * costs[0],
            });
        }
        let mut report = estimate_fixed(plan, hierarchy, &[n], cfg.alpha, seed, replicate)?;
        report.budget = budget;
        return Ok(report);
    }
    let initial: f64 = costs.iter().map(|c| c * cfg.n_init as f64).sum();
    if budget < initial {
        return Err(Error::BudgetTooSmall { budget, initial });
    }
    let mut state = RunState::new(plan, hierarchy, cfg.alpha, seed, replicate)?;
    let mut delta = vec![cfg.n_init; costs.len()];
    let mut consumed = 0.0;
    let mut trace = Vec::new();
    let mut levels = Vec::new();
    while consumed <= budget {
        state.draw(hierarchy, &delta);
        consumed = state.consumed();
        levels = state.levels()?;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (l, est) in levels.iter().enumerate() {
            let n = est.n as f64;
            let score = est.variance_cv / (cfg.inflation * n * n * costs[l]);
            if score > best_score {
                best_score = score;
                best = l;
            }
        }
        let inc = (((cfg.inflation - 1.0) * levels[best].n as f64).floor() as usize).max(1);
        delta.iter_mut().for_each(|d| *d = 0);
        delta[best] = inc;
        trace.push(TraceStep {
            n: levels.iter().map(|l| l.n).collect(),
            consumed,
            variances_cv: levels.iter().map(|l| l.variance_cv).collect(),
            selected: (consumed <= budget).then_some(best),
            increment: if consumed <= budget { inc } else { 0 },
        });
    }
    Ok(assemble(plan, budget, consumed, levels, trace))
}

/// Runs `replicates` independent adaptive runs, in replicate order.
pub fn run_replicates<H: LevelHierarchy + ?Sized>(
    plan: &MethodPlan,
    hierarchy: &H,
    budget: f64,
    cfg: &DriverConfig,
    seed: u64,
    replicates: usize,
) -> Vec<Result<RunReport>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| adaptive_run(plan, hierarchy, budget, cfg, seed, r))
        .collect()
}

/// Spread of replicate estimates around a reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicates: usize,
    pub rmse: f64,
    pub mean: f64,
    pub std: f64,
}

impl ReplicateSummary {
    pub fn from_estimates(values: &[f64], reference: f64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            replicates: n,
            rmse: super::stats::rmse(values, reference),
            mean,
            std,
        }
    }

    /// Standard error of the replicate mean.
    pub fn standard_error(&self) -> f64 {
        self.std / (self.replicates as f64).sqrt()
    }
}

/// RMSE of `replicates` runs around `reference`.
pub fn replicate_rmse<H: LevelHierarchy + ?Sized>(
    plan: &MethodPlan,
    hierarchy: &H,
    budget: f64,
    cfg: &DriverConfig,
    seed: u64,
    replicates: usize,
    reference: f64,
) -> Result<ReplicateSummary> {
    if replicates < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: replicates,
        });
    }
    let values = run_replicates(plan, hierarchy, budget, cfg, seed, replicates)
        .into_iter()
        .map(|r| r.map(|r| r.estimate))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateSummary::from_estimates(&values, reference))
}

/// Plain multilevel Monte Carlo with prescribed sample sizes.
pub fn mlmc_estimate<H: LevelHierarchy + ?Sized>(
    hierarchy: &H,
    n: &[usize],
    statistic: Statistic,
    seed: u64,
    replicate: u64,
) -> Result<RunReport> {
    let plan = MethodPlan::new(Method::Mlmc, hierarchy, &ControlSuite::default(), statistic)?;
    estimate_fixed(&plan, hierarchy, n, AlphaMode::SameSample, seed, replicate)
}

/// Single-level estimator on the finest level with the surrogates of all
/// levels as controls.
pub fn mlcv_estimate<H: LevelHierarchy + ?Sized>(
    hierarchy: &H,
    suite: &ControlSuite,
    n: usize,
    statistic: Statistic,
    seed: u64,
    replicate: u64,
) -> Result<RunReport> {
    let plan = MethodPlan::new(Method::Mlcv, hierarchy, suite, statistic)?;
    estimate_fixed(&plan, hierarchy, &[n], AlphaMode::SameSample, seed, replicate)
}

/// Multilevel estimator with one control per level (or only on level 0 for
/// `MLMC-CV[0]`).
pub fn mlmc_cv_estimate<H: LevelHierarchy + ?Sized>(
    hierarchy: &H,
    suite: &ControlSuite,
    reduced: bool,
    n: &[usize],
    statistic: Statistic,
    seed: u64,
    replicate: u64,
) -> Result<RunReport> {
    let method = if reduced { Method::MlmcCv0 } else { Method::MlmcCv };
    let plan = MethodPlan::new(method, hierarchy, suite, statistic)?;
    estimate_fixed(&plan, hierarchy, n, AlphaMode::SameSample, seed, replicate)
}

/// Multilevel estimator with the controls of all levels on every level (or
/// the reduced set of `MLMC-MLCV[0]`).
pub fn mlmc_mlcv_estimate<H: LevelHierarchy + ?Sized>(
    hierarchy: &H,
    suite: &ControlSuite,
    reduced: bool,
    n: &[usize],
    statistic: Statistic,
    seed: u64,
    replicate: u64,
) -> Result<RunReport> {
    let method = if reduced { Method::MlmcMlcv0 } else { Method::MlmcMlcv };
    let plan = MethodPlan::new(method, hierarchy, suite, statistic)?;
    estimate_fixed(&plan, hierarchy, n, AlphaMode::SameSample, seed, replicate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.tag()));
        }
        assert_eq!("mlmc-mlcv[0]".parse::<Method>().unwrap(), Method::MlmcMlcv0);
        assert!("MLMF".parse::<Method>().is_err());
    }
}
