//! Surrogate models used as control variates.

use std::sync::Arc;

use crate::error::Result;
use crate::pce::basis::UnivariateTable;
use crate::pce::{PcEvaluator, PcSurrogate};
use crate::taylor::{PiecewiseT1, TaylorSurrogate};

/// A cheap model with exactly known mean and variance.
pub trait Control: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    fn as_pc(&self) -> Option<&PcSurrogate> {
        None
    }
}

impl Control for PcSurrogate {
    fn eval(&self, x: &[f64]) -> f64 {
        PcSurrogate::eval(self, x)
    }
    fn mean(&self) -> f64 {
        PcSurrogate::mean(self)
    }
    fn variance(&self) -> f64 {
        PcSurrogate::variance(self)
    }
    fn as_pc(&self) -> Option<&PcSurrogate> {
        Some(self)
    }
}

impl Control for TaylorSurrogate {
    fn eval(&self, x: &[f64]) -> f64 {
        TaylorSurrogate::eval(self, x)
    }
    fn mean(&self) -> f64 {
        TaylorSurrogate::mean(self)
    }
    fn variance(&self) -> f64 {
        TaylorSurrogate::variance(self)
    }
}

impl Control for PiecewiseT1 {
    fn eval(&self, x: &[f64]) -> f64 {
        PiecewiseT1::eval(self, x)
    }
    fn mean(&self) -> f64 {
        PiecewiseT1::mean(self)
    }
    fn variance(&self) -> f64 {
        PiecewiseT1::variance(self)
    }
}

pub type SharedControl = Arc<dyn Control>;

/// Evaluates a fixed list of controls at one point, sharing the polynomial
/// table between all polynomial chaos members.
pub struct ControlBank {
    models: Vec<SharedControl>,
    pc: Option<(PcEvaluator, Vec<usize>)>,
}

/// Per-thread buffers for [`ControlBank::eval_into`].
pub struct BankScratch {
    pc: Option<(UnivariateTable, Vec<f64>)>,
    pc_out: Vec<f64>,
}

impl ControlBank {
    pub fn new(models: Vec<SharedControl>) -> Result<Self> {
        let pc_members: Vec<usize> = (0..models.len()).filter(|&i| models[i].as_pc().is_some()).collect();
        let pc = if pc_members.is_empty() {
            None
        } else {
            let refs: Vec<&PcSurrogate> = pc_members.iter().map(|&i| models[i].as_pc().expect("pc member")).collect();
            Some((PcEvaluator::new(&refs)?, pc_members))
        };
        Ok(Self { models, pc })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[SharedControl] {
        &self.models
    }

    pub fn scratch(&self) -> BankScratch {
        BankScratch {
            pc: self.pc.as_ref().map(|(e, _)| e.scratch()),
            pc_out: vec![0.0; self.pc.as_ref().map_or(0, |(_, m)| m.len())],
        }
    }

    pub fn eval_into(&self, scratch: &mut BankScratch, x: &[f64], out: &mut [f64]) {
        if let (Some((eval, members)), Some(s)) = (&self.pc, scratch.pc.as_mut()) {
            eval.eval_into(s, x, &mut scratch.pc_out);
            for (k, &i) in members.iter().enumerate() {
                out[i] = scratch.pc_out[k];
            }
        }
        for (i, m) in self.models.iter().enumerate() {
            if m.as_pc().is_none() {
                out[i] = m.eval(x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pce::{MultiIndex, Provenance};
    use crate::sampling::InputSpace;
    use crate::taylor::TaylorOrder;

    #[test]
    fn bank_matches_individual_evaluation() {
        let space = InputSpace::new(vec![(-1.0, 1.0), (0.0, 2.0)]).unwrap();
        let a = PcSurrogate::new(
            space.clone(),
            vec![MultiIndex(vec![0, 0]), MultiIndex(vec![1, 0]), MultiIndex(vec![1, 2])],
            vec![1.0, 0.5, -0.25],
            Provenance::default(),
        )
        .unwrap();
        let b = PcSurrogate::new(
            space,
            vec![MultiIndex(vec![0, 0]), MultiIndex(vec![0, 3])],
            vec![-2.0, 0.75],
            Provenance::default(),
        )
        .unwrap();
        let t = TaylorSurrogate {
            order: TaylorOrder::First,
            center: vec![0.0, 1.0],
            value: 3.0,
            jacobian: vec![1.0, -1.0],
            hessian: None,
            variances: vec![1.0 / 3.0, 1.0 / 3.0],
        };
        let models: Vec<SharedControl> = vec![Arc::new(a.clone()), Arc::new(t.clone()), Arc::new(b.clone())];
        let bank = ControlBank::new(models).unwrap();
        let mut s = bank.scratch();
        let mut out = [0.0; 3];
        let x = [0.3, 1.7];
        bank.eval_into(&mut s, &x, &mut out);
        assert!((out[0] - a.eval(&x)).abs() < 1e-13);
        assert!((out[1] - t.eval(&x)).abs() < 1e-13);
        assert!((out[2] - b.eval(&x)).abs() < 1e-13);
    }
}
