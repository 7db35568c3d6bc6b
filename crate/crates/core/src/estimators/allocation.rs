//! Optimal per-level sample sizes under a cost budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Continuous optimal sample sizes.
    pub n: Vec<f64>,
    /// `S_L = sum sqrt(cost_l V_l)`.
    pub s_l: f64,
    /// Fraction of the budget spent on each level.
    pub shares: Vec<f64>,
}

impl Allocation {
    /// `S_L^2`, the budget-normalized variance bound.
    pub fn s_l2(&self) -> f64 {
        self.s_l * self.s_l
    }
}

/// `n_l = (C / S_L) sqrt(V_l / cost_l)`; levels with zero variance get
/// `n_init` samples and the rest of the budget is split among the others.
pub fn optimal_allocation(variances: &[f64], costs: &[f64], budget: f64, n_init: usize) -> Result<Allocation> {
    if variances.len() != costs.len() || variances.is_empty() {
        return Err(Error::InvalidConfig("one variance and one cost per level required".into()));
    }
    if !(budget > 0.0) || costs.iter().any(|c| !(*c > 0.0)) || variances.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidConfig("budget and costs must be positive, variances nonnegative".into()));
    }
    let s_l: f64 = variances.iter().zip(costs).map(|(v, c)| (v * c).sqrt()).sum();
    let reserved: f64 = variances
        .iter()
        .zip(costs)
        .filter(|(v, _)| **v == 0.0)
        .map(|(_, c)| n_init as f64 * c)
        .sum();
    let free = (budget - reserved).max(0.0);
    let n: Vec<f64> = variances
        .iter()
        .zip(costs)
        .map(|(v, c)| {
            if *v == 0.0 {
                n_init as f64
            } else {
                free / s_l * (v / c).sqrt()
            }
        })
        .collect();
    let spent: f64 = n.iter().zip(costs).map(|(n, c)| n * c).sum();
    let shares = n.iter().zip(costs).map(|(n, c)| n * c / spent).collect();
    Ok(Allocation { n, s_l, shares })
}
