use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{DriverConfig, Method};
use crate::heatbench::HeatConfig;
use crate::sampling::AnnealConfig;

/// How the per-level surrogates are trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogatePlan {
    /// Training-set size per level, coarsest first.
    pub doe_sizes: Vec<usize>,
    pub p_max: usize,
    /// Draw each level's design as a subset of the previous one, so that
    /// `h_l` reuses the `f_{l-1}` runs of the coarser design.
    pub nested: bool,
    /// Candidate subsets examined when picking a nested design.
    pub subset_pool: usize,
    pub anneal_iterations: usize,
    /// Size of the independent sample used to score the surrogates.
    pub test_size: usize,
}

impl Default for SurrogatePlan {
    fn default() -> Self {
        Self {
            doe_sizes: vec![800, 400, 200, 100],
            p_max: 16,
            nested: true,
            subset_pool: 10_000,
            anneal_iterations: AnnealConfig::default().iterations,
            test_size: 10_000,
        }
    }
}

/// Sample sizes of the correlation and per-level tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TablesConfig {
    pub correlation_samples: usize,
    pub level_samples: usize,
}

impl Default for TablesConfig {
    fn default() -> Self {
        Self {
            correlation_samples: 1000,
            level_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub seed: u64,
    pub benchmark: HeatConfig,
    pub methods: Vec<Method>,
    pub budgets: Vec<f64>,
    pub replicates: usize,
    /// Shift the cost axis of each cell by the method's surrogate
    /// construction cost.
    pub include_construction_cost: bool,
    /// Value the RMSE is measured against; the exact expectation when unset.
    pub reference: Option<f64>,
    /// Use the closed-form covariance of polynomial chaos controls when
    /// solving for the control parameters.
    pub exact_covariance: bool,
    pub surrogates: SurrogatePlan,
    pub driver: DriverConfig,
    pub tables: TablesConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            benchmark: HeatConfig::default(),
            methods: Method::ALL.to_vec(),
            budgets: vec![100.0, 300.0, 1000.0, 3000.0, 10_000.0],
            replicates: 100,
            include_construction_cost: false,
            reference: None,
            exact_covariance: false,
            surrogates: SurrogatePlan::default(),
            driver: DriverConfig::default(),
            tables: TablesConfig::default(),
        }
    }
}

impl CampaignConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Larger replicate count and subset pool.
    pub fn full_profile(mut self) -> Self {
        self.replicates = 500;
        self.surrogates.subset_pool = 1_000_000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.benchmark.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.budgets.is_empty() || self.budgets.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("budgets must be positive");
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return bad("budgets must be strictly ascending");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("at least one method required");
        }
        let levels = self.benchmark.levels.nodes.len();
        let plan = &self.surrogates;
        if plan.doe_sizes.len() != levels {
            return bad("one design size per level required");
        }
        if plan.nested && plan.doe_sizes.windows(2).any(|w| w[1] > w[0]) {
            return bad("nested designs must not grow with the level");
        }
        if plan.p_max == 0 || plan.subset_pool == 0 || plan.test_size < 2 {
            return bad("p_max, subset_pool and test_size must be positive");
        }
        if self.tables.correlation_samples < 3 || self.tables.level_samples < 2 {
            return bad("table sample sizes too small");
        }
        Ok(())
    }
}
