use serde::{Deserialize, Serialize};

use super::suite::SurrogateSuite;
use crate::error::{Error, Result};
use super::campaign::expectation_plan;
use crate::estimators::{estimate_fixed, optimal_allocation, pearson, AlphaMode, Method};
use crate::heatbench::{HeatBenchmark, LevelHierarchy};
use crate::sampling::{iid_sample, seed_from_label, Purpose, RngStream};

/// Pearson correlation matrix of named samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub title: String,
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl CorrelationTable {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.matrix[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(",{}\n", self.names.join(","));
        for (name, row) in self.names.iter().zip(&self.matrix) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{name},{}\n", cells.join(",")));
        }
        out
    }
}

pub fn correlation_table(title: &str, entities: &[(String, Vec<f64>)]) -> Result<CorrelationTable> {
    let n = entities.first().map_or(0, |e| e.1.len());
    if n < 3 {
        return Err(Error::InsufficientSamples { required: 3, got: n });
    }
    if entities.iter().any(|e| e.1.len() != n) {
        return Err(Error::InvalidConfig("correlated samples differ in length".into()));
    }
    let m = entities.len();
    let mut matrix = vec![vec![1.0; m]; m];
    for i in 0..m {
        for j in 0..i {
            let r = pearson(&entities[i].1, &entities[j].1)
                .map_err(|_| Error::ZeroVariance(format!("{} or {}", entities[i].0, entities[j].0)))?;
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
        if crate::estimators::mc_var(&entities[i].1)? <= 0.0 {
            return Err(Error::ZeroVariance(entities[i].0.clone()));
        }
    }
    Ok(CorrelationTable {
        title: title.to_string(),
        names: entities.iter().map(|e| e.0.clone()).collect(),
        matrix,
    })
}

/// Correlations between the simulators and their surrogates on one shared
/// sample: finest level against its polynomial and Taylor surrogates, every
/// level against `g_l`, and every correction against `h_l`.
pub fn benchmark_correlations(
    bench: &HeatBenchmark,
    suite: &SurrogateSuite,
    n: usize,
    seed: u64,
) -> Result<Vec<CorrelationTable>> {
    let levels = bench.n_levels();
    let finest = levels - 1;
    let sample = iid_sample(bench.space(), n, RngStream::keyed(seed, 0, 0, Purpose::Correlation))?;
    let y: Vec<Vec<f64>> = (0..levels).map(|l| sample.rows().map(|x| bench.eval(l, x)).collect()).collect();
    let g: Vec<Vec<f64>> = suite.g.iter().map(|s| s.eval_doe(&sample)).collect();
    let t1: Vec<f64> = sample.rows().map(|x| suite.taylor.eval(x)).collect();

    let finest_table = correlation_table(
        "finest",
        &[
            (format!("Y_{finest}"), y[finest].clone()),
            (format!("PC_{finest}"), g[finest].clone()),
            (format!("T1_{finest}"), t1),
        ],
    )?;
    let mut level_entities = Vec::new();
    for l in 0..levels {
        level_entities.push((format!("Y_{l}"), y[l].clone()));
    }
    for l in 0..levels {
        level_entities.push((format!("g_{l}"), g[l].clone()));
    }
    let mut tables = vec![finest_table, correlation_table("levels", &level_entities)?];
    if levels > 1 {
        let mut diff_entities = Vec::new();
        for l in 1..levels {
            let d = y[l].iter().zip(&y[l - 1]).map(|(a, b)| a - b).collect();
            diff_entities.push((format!("D_{l}"), d));
        }
        for l in 1..levels {
            let h = suite.h[l].as_ref().expect("difference surrogate").eval_doe(&sample);
            diff_entities.push((format!("h_{l}"), h));
        }
        tables.push(correlation_table("corrections", &diff_entities)?);
    }
    Ok(tables)
}

/// Per-level variances, variance reductions and optimal allocation of one
/// estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub method: Method,
    pub levels: Vec<usize>,
    /// Per-sample variance of each level's plain correction estimator.
    pub variance: Vec<f64>,
    pub r2: Vec<f64>,
    pub variance_cv: Vec<f64>,
    /// Optimal fraction of the budget per level.
    pub shares: Vec<f64>,
    pub s_l2: f64,
}

/// Measures each level of every method on `n` samples per level. All
/// methods share the same samples.
pub fn level_table(
    bench: &HeatBenchmark,
    suite: &SurrogateSuite,
    methods: &[Method],
    n: usize,
    seed: u64,
    exact_covariance: bool,
) -> Result<Vec<LevelRow>> {
    let controls = suite.controls();
    let table_seed = seed_from_label(seed, "level-table");
    methods
        .iter()
        .map(|&method| {
            let plan = expectation_plan(method, bench, &controls, exact_covariance)?;
            let sizes = vec![n; plan.levels.len()];
            let run = estimate_fixed(&plan, bench, &sizes, AlphaMode::SameSample, table_seed, 0)?;
            let variance_cv: Vec<f64> = run.levels.iter().map(|l| l.variance_cv).collect();
            let alloc = optimal_allocation(&variance_cv, &plan.costs(), 1.0, 0)?;
            Ok(LevelRow {
                method,
                levels: run.levels.iter().map(|l| l.level).collect(),
                variance: run.levels.iter().map(|l| l.variance).collect(),
                r2: run.levels.iter().map(|l| l.r2).collect(),
                variance_cv,
                s_l2: alloc.s_l2(),
                shares: alloc.shares,
            })
        })
        .collect()
}

pub fn level_table_csv(rows: &[LevelRow]) -> String {
    let mut out = String::from("method,level,variance,r2,variance_cv,share,s_l2\n");
    for r in rows {
        for k in 0..r.levels.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method, r.levels[k], r.variance[k], r.r2[k], r.variance_cv[k], r.shares[k], r.s_l2
            ));
        }
    }
    out
}
