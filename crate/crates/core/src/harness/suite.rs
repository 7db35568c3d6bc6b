use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SurrogatePlan;
use crate::error::{Error, Result};
use crate::estimators::{ControlSuite, Method, SharedControl};
use crate::heatbench::{HeatBenchmark, LevelHierarchy};
use crate::pce::{adaptive_fit, q2_values, AdaptiveConfig, PcSurrogate};
use crate::sampling::{iid_sample, lhs_sample, nested_subset, AnnealConfig, Doe, Purpose, RngStream};
use crate::taylor::{heat_t1, PiecewiseT1};

/// Predictive quality of one surrogate on the independent test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub name: String,
    pub n_train: usize,
    pub degree: usize,
    pub terms: usize,
    pub q2: f64,
}

/// Trained surrogates of every level plus the bookkeeping needed to charge
/// their construction cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateSuite {
    pub g: Vec<PcSurrogate>,
    /// `h_l` at index `l`; index 0 is `None`.
    pub h: Vec<Option<PcSurrogate>>,
    /// `g~_{l-1} = g_l - h_l` at index `l - 1`.
    pub g_tilde: Vec<PcSurrogate>,
    pub taylor: PiecewiseT1,
    pub quality: Vec<QualityRow>,
    pub doe_sizes: Vec<usize>,
    pub nested: bool,
    pub costs: Vec<f64>,
}

fn fit_labelled(doe: &Doe, y: &[f64], cfg: &AdaptiveConfig, label: String) -> Result<PcSurrogate> {
    let mut s = adaptive_fit(doe, y, cfg).map_err(|e| Error::Fit {
        target: label.clone(),
        source: Box::new(e),
    })?;
    s.set_label(label);
    Ok(s)
}

/// Trains `g_l`, `h_l` and `g~_{l-1}` on per-level designs and scores them
/// against an independent sample.
pub fn build_surrogate_suite(bench: &HeatBenchmark, plan: &SurrogatePlan, seed: u64) -> Result<SurrogateSuite> {
    let levels = bench.n_levels();
    if plan.doe_sizes.len() != levels {
        return Err(Error::InvalidConfig("one design size per level required".into()));
    }
    let space = bench.space().clone();
    let anneal = AnnealConfig {
        iterations: plan.anneal_iterations,
        ..AnnealConfig::default()
    };
    let mut designs: Vec<Doe> = Vec::with_capacity(levels);
    for l in 0..levels {
        let doe = if plan.nested && l > 0 {
            let stream = RngStream::keyed(seed, l as u32, 0, Purpose::Subset);
            nested_subset(&designs[l - 1], plan.doe_sizes[l], plan.subset_pool, stream)?
        } else {
            lhs_sample(&space, plan.doe_sizes[l], RngStream::keyed(seed, l as u32, 0, Purpose::Doe), anneal)?
        };
        designs.push(doe);
    }
    let fit_cfg = AdaptiveConfig {
        p_max: plan.p_max,
        ..AdaptiveConfig::default()
    };
    // One task per fitted model: (level, is_difference).
    let tasks: Vec<(usize, bool)> = (0..levels)
        .flat_map(|l| std::iter::once((l, false)).chain((l > 0).then_some((l, true))))
        .collect();
    let fitted = tasks
        .par_iter()
        .map(|&(l, diff)| {
            let doe = &designs[l];
            let y: Vec<f64> = doe
                .rows()
                .map(|x| {
                    if diff {
                        let (f, c) = bench.eval_pair(l, x);
                        f - c
                    } else {
                        bench.eval(l, x)
                    }
                })
                .collect();
            let label = if diff { format!("h_{l}") } else { format!("g_{l}") };
            fit_labelled(doe, &y, &fit_cfg, label)
        })
        .collect::<Vec<_>>();
    let mut g = Vec::with_capacity(levels);
    let mut h = vec![None];
    for ((_, diff), s) in tasks.iter().zip(fitted) {
        if *diff {
            h.push(Some(s?));
        } else {
            g.push(s?);
        }
    }
    let mut g_tilde = Vec::with_capacity(levels.saturating_sub(1));
    for l in 1..levels {
        let mut t = g[l].sub(h[l].as_ref().expect("difference surrogate"))?;
        t.set_label(format!("g_tilde_{}", l - 1));
        g_tilde.push(t);
    }
    let taylor = heat_t1(bench, levels - 1)?;

    let test = iid_sample(&space, plan.test_size, RngStream::keyed(seed, 0, 0, Purpose::Test))?;
    let truth: Vec<Vec<f64>> = test.rows().map(|x| (0..levels).map(|l| bench.eval(l, x)).collect()).collect();
    let column = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> { truth.iter().map(|t| f(t)).collect() };
    let mut quality = Vec::new();
    let mut score = |s: &PcSurrogate, target: Vec<f64>| -> Result<()> {
        quality.push(QualityRow {
            name: s.provenance().label.clone(),
            n_train: s.provenance().n_train,
            degree: s.degree(),
            terms: s.len(),
            q2: q2_values(&s.eval_doe(&test), &target)?,
        });
        Ok(())
    };
    for l in 0..levels {
        score(&g[l], column(&|t| t[l]))?;
    }
    for l in 1..levels {
        score(h[l].as_ref().expect("difference surrogate"), column(&|t| t[l] - t[l - 1]))?;
    }
    for l in 1..levels {
        score(&g_tilde[l - 1], column(&|t| t[l - 1]))?;
    }
    let taylor_pred: Vec<f64> = test.rows().map(|x| taylor.eval(x)).collect();
    quality.push(QualityRow {
        name: format!("t1_{}", levels - 1),
        n_train: 0,
        degree: 1,
        terms: 0,
        q2: q2_values(&taylor_pred, &column(&|t| t[levels - 1]))?,
    });

    Ok(SurrogateSuite {
        g,
        h,
        g_tilde,
        taylor,
        quality,
        doe_sizes: plan.doe_sizes.clone(),
        nested: plan.nested,
        costs: (0..levels).map(|l| bench.cost(l)).collect(),
    })
}

impl SurrogateSuite {
    pub fn levels(&self) -> usize {
        self.g.len()
    }

    /// Shared handles for the estimators.
    pub fn controls(&self) -> ControlSuite {
        let wrap = |s: &PcSurrogate| -> SharedControl { Arc::new(s.clone()) };
        let finest = self.levels() - 1;
        ControlSuite {
            g: self.g.iter().map(|s| Some(wrap(s))).collect(),
            h: self.h.iter().map(|s| s.as_ref().map(wrap)).collect(),
            g_tilde: self.g_tilde.iter().map(|s| Some(wrap(s))).collect(),
            finest_pc: Some(wrap(&self.g[finest])),
            finest_taylor: Some(Arc::new(self.taylor.clone())),
        }
    }

    /// Simulator cost of training the surrogates `method` uses.
    ///
    /// With nested designs `h_l` reuses the `f_{l-1}` runs of the coarser
    /// design; otherwise they are charged on top.
    pub fn construction_cost(&self, method: Method) -> f64 {
        let finest = self.levels() - 1;
        let all: Vec<usize> = (0..=finest).collect();
        let (g, h): (Vec<usize>, Vec<usize>) = match method {
            Method::Mc | Method::CvT1 | Method::Mlmc => (vec![], vec![]),
            Method::CvPc | Method::CvPcT1 => (vec![finest], vec![]),
            Method::Mlcv => (all, vec![]),
            Method::MlmcCv | Method::MlmcMlcv => (all.clone(), all[1..].to_vec()),
            Method::MlmcCv0 => (vec![0], vec![]),
            Method::MlmcMlcv0 => (vec![0, 1.min(finest)], if finest > 0 { vec![1] } else { vec![] }),
        };
        let mut designs: BTreeSet<usize> = g.into_iter().collect();
        let mut cost = 0.0;
        for &l in &h {
            designs.insert(l);
            if self.nested {
                designs.insert(l - 1);
            } else {
                cost += self.doe_sizes[l] as f64 * self.costs[l - 1];
            }
        }
        cost + designs.iter().map(|&l| self.doe_sizes[l] as f64 * self.costs[l]).sum::<f64>()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn quality_csv(&self) -> String {
        let mut out = String::from("surrogate,n_train,degree,terms,q2\n");
        for q in &self.quality {
            out.push_str(&format!("{},{},{},{},{}\n", q.name, q.n_train, q.degree, q.terms, q.q2));
        }
        out
    }
}
