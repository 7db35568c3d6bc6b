use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::suite::{QualityRow, SurrogateSuite};
use crate::error::Result;
use crate::estimators::{run_replicates, ControlSuite, Method, MethodPlan, ReplicateSummary, RunReport, Statistic};
use crate::heatbench::HeatBenchmark;
use crate::sampling::seed_from_label;

/// Condensed record of one replicate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub budget: f64,
    pub replicate: usize,
    pub consumed: f64,
    pub estimate: f64,
    pub n: Vec<usize>,
    /// Cost of one sample on each level.
    pub costs: Vec<f64>,
    pub variance_cv: Vec<f64>,
    pub r2: Vec<f64>,
}

impl RunSummary {
    fn from_report(report: &RunReport, replicate: usize, costs: Vec<f64>) -> Self {
        Self {
            method: report.method,
            budget: report.budget,
            replicate,
            consumed: report.consumed,
            estimate: report.estimate,
            n: report.n(),
            costs,
            variance_cv: report.levels.iter().map(|l| l.variance_cv).collect(),
            r2: report.levels.iter().map(|l| l.r2).collect(),
        }
    }

    /// Fraction of the sampling cost spent on each level.
    pub fn shares(&self) -> Vec<f64> {
        let spent: Vec<f64> = self.n.iter().zip(&self.costs).map(|(n, c)| *n as f64 * c).collect();
        let total: f64 = spent.iter().sum();
        spent.iter().map(|s| s / total).collect()
    }
}

/// Replicate statistics of one (method, budget) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: Method,
    pub budget: f64,
    pub construction_cost: f64,
    /// Position on the cost axis: the budget, plus the construction cost
    /// when it is included.
    pub cost: f64,
    pub replicates: usize,
    pub failures: usize,
    pub summary: Option<ReplicateSummary>,
    pub mean_consumed: Option<f64>,
    /// First error encountered, if any replicate failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub reference: f64,
    pub cells: Vec<CellReport>,
    pub runs: Vec<RunSummary>,
    pub quality: Vec<QualityRow>,
}

/// Runs every (method, budget) cell with independent replicates.
///
/// Each cell draws from its own seed, derived from the master seed and the
/// cell label, so cells are reproducible in isolation. A failing cell is
/// recorded and the campaign moves on.
pub fn run_campaign(cfg: &CampaignConfig, bench: &HeatBenchmark, suite: &SurrogateSuite) -> CampaignReport {
    let reference = cfg.reference.unwrap_or_else(|| bench.exact_expectation());
    let controls = suite.controls();
    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for &method in &cfg.methods {
        let plan = expectation_plan(method, bench, &controls, cfg.exact_covariance);
        let construction_cost = suite.construction_cost(method);
        for &budget in &cfg.budgets {
            let mut cell = CellReport {
                method,
                budget,
                construction_cost,
                cost: budget + if cfg.include_construction_cost { construction_cost } else { 0.0 },
                replicates: cfg.replicates,
                failures: 0,
                summary: None,
                mean_consumed: None,
                error: None,
            };
            let plan = match &plan {
                Ok(p) => p,
                Err(e) => {
                    cell.failures = cfg.replicates;
                    cell.error = Some(e.to_string());
                    cells.push(cell);
                    continue;
                }
            };
            let seed = seed_from_label(cfg.seed, &format!("{method}@{budget}"));
            let results = run_replicates(plan, bench, budget, &cfg.driver, seed, cfg.replicates);
            let mut estimates = Vec::new();
            let mut consumed = 0.0;
            for (r, res) in results.into_iter().enumerate() {
                match res {
                    Ok(report) => {
                        estimates.push(report.estimate);
                        consumed += report.consumed;
                        runs.push(RunSummary::from_report(&report, r, plan.costs()));
                    }
                    Err(e) => {
                        cell.failures += 1;
                        cell.error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            if !estimates.is_empty() {
                cell.summary = Some(ReplicateSummary::from_estimates(&estimates, reference));
                cell.mean_consumed = Some(consumed / estimates.len() as f64);
            }
            cells.push(cell);
        }
    }
    CampaignReport {
        reference,
        cells,
        runs,
        quality: suite.quality.clone(),
    }
}

/// Expectation estimator of `method`, optionally with the closed-form
/// control covariance.
pub fn expectation_plan(method: Method, bench: &HeatBenchmark, controls: &ControlSuite, exact: bool) -> Result<MethodPlan> {
    let plan = MethodPlan::new(method, bench, controls, Statistic::Expectation)?;
    if exact {
        plan.with_exact_covariance()
    } else {
        Ok(plan)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

impl CampaignReport {
    pub fn cell(&self, method: Method, budget: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.method == method && c.budget == budget)
    }

    pub fn rmse(&self, method: Method, budget: f64) -> Option<f64> {
        self.cell(method, budget).and_then(|c| c.summary.map(|s| s.rmse))
    }

    /// One row per cell; numbers use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,budget,construction_cost,cost,replicates,failures,rmse,mean,std,mean_consumed,status\n",
        );
        for c in &self.cells {
            let status = match (&c.summary, &c.error) {
                (Some(_), None) => "ok".to_string(),
                (Some(_), Some(e)) => format!("partial: {}", e.replace(',', ";")),
                (None, e) => format!("failed: {}", e.as_deref().unwrap_or("no runs").replace(',', ";")),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.method,
                c.budget,
                c.construction_cost,
                c.cost,
                c.replicates,
                c.failures,
                opt(c.summary.map(|s| s.rmse)),
                opt(c.summary.map(|s| s.mean)),
                opt(c.summary.map(|s| s.std)),
                opt(c.mean_consumed),
                status
            );
        }
        out
    }

    /// Plain-text RMSE grid, methods by budgets.
    pub fn summary_text(&self) -> String {
        let mut budgets: Vec<f64> = Vec::new();
        let mut methods: Vec<Method> = Vec::new();
        for c in &self.cells {
            if !budgets.contains(&c.budget) {
                budgets.push(c.budget);
            }
            if !methods.contains(&c.method) {
                methods.push(c.method);
            }
        }
        let mut out = format!("reference {:.6}\nRMSE by budget\n{:<14}", self.reference, "method");
        for b in &budgets {
            let _ = write!(out, "{:>12}", b);
        }
        out.push('\n');
        for m in methods {
            let _ = write!(out, "{:<14}", m.tag());
            for &b in &budgets {
                match self.rmse(m, b) {
                    Some(r) => {
                        let _ = write!(out, "{:>12.4e}", r);
                    }
                    None => {
                        let _ = write!(out, "{:>12}", "failed");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes `campaign.csv`, `runs.json`, `allocation.csv`, `quality.csv`
    /// and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("campaign.csv"), self.to_csv())?;
        std::fs::write(dir.join("runs.json"), serde_json::to_string(&self.runs)?)?;
        std::fs::write(dir.join("allocation.csv"), allocation_csv(&allocation_report(&self.runs)))?;
        let mut quality = String::from("surrogate,n_train,degree,terms,q2\n");
        for q in &self.quality {
            let _ = writeln!(quality, "{},{},{},{},{}", q.name, q.n_train, q.degree, q.terms, q.q2);
        }
        std::fs::write(dir.join("quality.csv"), quality)?;
        std::fs::write(dir.join("summary.txt"), self.summary_text())?;
        Ok(())
    }
}

/// Distribution of per-level sample sizes and cost shares over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub method: Method,
    pub budget: f64,
    pub level: usize,
    pub runs: usize,
    pub n_q1: f64,
    pub n_median: f64,
    pub n_q3: f64,
    /// Mean fraction of the sampling cost spent on this level.
    pub share: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups runs by (method, budget), in order of first appearance.
pub fn allocation_report(runs: &[RunSummary]) -> Vec<AllocationRow> {
    let mut keys: Vec<(Method, f64)> = Vec::new();
    for r in runs {
        if !keys.iter().any(|k| k.0 == r.method && k.1 == r.budget) {
            keys.push((r.method, r.budget));
        }
    }
    let mut rows = Vec::new();
    for (method, budget) in keys {
        let group: Vec<&RunSummary> = runs.iter().filter(|r| r.method == method && r.budget == budget).collect();
        let levels = group[0].n.len();
        let shares: Vec<Vec<f64>> = group.iter().map(|r| r.shares()).collect();
        for l in 0..levels {
            let mut n: Vec<f64> = group.iter().map(|r| r.n[l] as f64).collect();
            n.sort_by(f64::total_cmp);
            rows.push(AllocationRow {
                method,
                budget,
                level: l,
                runs: group.len(),
                n_q1: quantile(&n, 0.25),
                n_median: quantile(&n, 0.5),
                n_q3: quantile(&n, 0.75),
                share: shares.iter().map(|s| s[l]).sum::<f64>() / group.len() as f64,
            });
        }
    }
    rows
}

pub fn allocation_csv(rows: &[AllocationRow]) -> String {
    let mut out = String::from("method,budget,level,runs,n_q1,n_median,n_q3,share\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method, r.budget, r.level, r.runs, r.n_q1, r.n_median, r.n_q3, r.share
        );
    }
    out
}
