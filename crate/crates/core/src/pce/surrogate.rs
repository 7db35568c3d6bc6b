//! Fitted polynomial-chaos surrogates and their closed-form statistics.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::basis::{Basis, MultiIndex, UnivariateTable};
use crate::error::{Error, Result};
use crate::sampling::{Doe, InputSpace};

/// How a surrogate was obtained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Seed of the training design, when known.
    pub doe_seed: Option<u64>,
    pub n_train: usize,
    /// Selected total degree.
    pub degree: usize,
    /// Corrected leave-one-out error of the selected model.
    pub loo: Option<f64>,
    /// Free-form label (e.g. `g_0`, `h_2`).
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PcDocument {
    space: InputSpace,
    indices: Vec<MultiIndex>,
    coeffs: Vec<f64>,
    provenance: Provenance,
}

/// `g(x) = sum_k coeffs[k] Psi_k(x)` over an orthonormal Legendre basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PcDocument", into = "PcDocument")]
pub struct PcSurrogate {
    basis: Basis,
    coeffs: Vec<f64>,
    provenance: Provenance,
}

impl TryFrom<PcDocument> for PcSurrogate {
    type Error = Error;

    fn try_from(doc: PcDocument) -> Result<Self> {
        PcSurrogate::new(doc.space, doc.indices, doc.coeffs, doc.provenance)
    }
}

impl From<PcSurrogate> for PcDocument {
    fn from(s: PcSurrogate) -> Self {
        PcDocument {
            space: s.basis.space().clone(),
            indices: s.basis.indices().to_vec(),
            coeffs: s.coeffs,
            provenance: s.provenance,
        }
    }
}

impl PartialEq for PcSurrogate {
    fn eq(&self, other: &Self) -> bool {
        self.basis.space() == other.basis.space()
            && self.basis.indices() == other.basis.indices()
            && self.coeffs == other.coeffs
            && self.provenance == other.provenance
    }
}

impl PcSurrogate {
    /// Builds a surrogate; the constant index is inserted (with coefficient 0)
    /// and moved to position 0 if needed.
    pub fn new(
        space: InputSpace,
        mut indices: Vec<MultiIndex>,
        mut coeffs: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if indices.len() != coeffs.len() {
            return Err(Error::Parse(format!(
                "{} indices but {} coefficients",
                indices.len(),
                coeffs.len()
            )));
        }
        let d = space.dims();
        if indices.iter().any(|i| i.dims() != d) {
            return Err(Error::MismatchedSpaces);
        }
        let mut seen = HashMap::new();
        for (k, idx) in indices.iter().enumerate() {
            if seen.insert(idx.clone(), k).is_some() {
                return Err(Error::Parse(format!("duplicate multi-index {idx}")));
            }
        }
        match seen.get(&MultiIndex::zero(d)) {
            Some(&0) => {}
            Some(&k) => {
                indices.swap(0, k);
                coeffs.swap(0, k);
            }
            None => {
                indices.insert(0, MultiIndex::zero(d));
                coeffs.insert(0, 0.0);
            }
        }
        Ok(Self {
            basis: Basis::new(space, indices),
            coeffs,
            provenance,
        })
    }

    pub fn space(&self) -> &InputSpace {
        self.basis.space()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        self.basis.indices()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.provenance.label = label.into();
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest total degree among the terms.
    pub fn degree(&self) -> usize {
        self.indices().iter().map(|i| i.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut table = self.basis.table();
        self.eval_with(&mut table, x)
    }

    pub fn eval_with(&self, table: &mut UnivariateTable, x: &[f64]) -> f64 {
        table.fill(self.basis.space(), x);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * self.basis.term(table, j))
            .sum()
    }

    pub fn eval_doe(&self, doe: &Doe) -> Vec<f64> {
        let mut table = self.basis.table();
        doe.rows().map(|x| self.eval_with(&mut table, x)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn variance(&self) -> f64 {
        self.coeffs[1..].iter().map(|c| c * c).sum()
    }

    /// `self - other` on the union of both bases.
    pub fn sub(&self, other: &PcSurrogate) -> Result<PcSurrogate> {
        self.combine(other, -1.0)
    }

    /// `self + factor * other` on the union of both bases.
    pub fn combine(&self, other: &PcSurrogate, factor: f64) -> Result<PcSurrogate> {
        if self.space() != other.space() {
            return Err(Error::MismatchedSpaces);
        }
        let mut indices = self.indices().to_vec();
        let mut coeffs = self.coeffs.clone();
        let mut pos: HashMap<&MultiIndex, usize> =
            self.indices().iter().enumerate().map(|(k, i)| (i, k)).collect();
        for (idx, &c) in other.indices().iter().zip(&other.coeffs) {
            match pos.get(idx) {
                Some(&k) => coeffs[k] += factor * c,
                None => {
                    pos.insert(idx, indices.len());
                    indices.push(idx.clone());
                    coeffs.push(factor * c);
                }
            }
        }
        PcSurrogate::new(self.space().clone(), indices, coeffs, Provenance::default())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `(mean, variance)` of a surrogate under the uniform input measure.
pub fn pc_moments(s: &PcSurrogate) -> (f64, f64) {
    (s.mean(), s.variance())
}

/// Covariance of two surrogates: products of coefficients on matching
/// non-constant indices.
pub fn pc_covariance(s1: &PcSurrogate, s2: &PcSurrogate) -> Result<f64> {
    if s1.space() != s2.space() {
        return Err(Error::MismatchedSpaces);
    }
    let pos: HashMap<&MultiIndex, usize> = s2
        .indices()
        .iter()
        .enumerate()
        .map(|(k, i)| (i, k))
        .collect();
    Ok(s1
        .indices()
        .iter()
        .zip(s1.coeffs())
        .skip(1)
        .filter_map(|(idx, c)| pos.get(idx).map(|&k| c * s2.coeffs()[k]))
        .sum())
}

/// Evaluates several surrogates at once on the union of their bases.
#[derive(Debug, Clone)]
pub struct PcEvaluator {
    basis: Basis,
    /// Row-major `surrogates x union terms` coefficients, stored sparsely.
    rows: Vec<Vec<(usize, f64)>>,
}

impl PcEvaluator {
    pub fn new(surrogates: &[&PcSurrogate]) -> Result<Self> {
        let space = match surrogates.first() {
            Some(s) => s.space().clone(),
            None => InputSpace::unit(1)?,
        };
        let mut indices: Vec<MultiIndex> = Vec::new();
        let mut pos: HashMap<MultiIndex, usize> = HashMap::new();
        let mut rows = Vec::with_capacity(surrogates.len());
        for s in surrogates {
            if s.space() != &space {
                return Err(Error::MismatchedSpaces);
            }
            let mut row = Vec::with_capacity(s.len());
            for (idx, &c) in s.indices().iter().zip(s.coeffs()) {
                let k = *pos.entry(idx.clone()).or_insert_with(|| {
                    indices.push(idx.clone());
                    indices.len() - 1
                });
                row.push((k, c));
            }
            rows.push(row);
        }
        Ok(Self {
            basis: Basis::new(space, indices),
            rows,
        })
    }

    pub fn outputs(&self) -> usize {
        self.rows.len()
    }

    pub fn scratch(&self) -> (UnivariateTable, Vec<f64>) {
        (self.basis.table(), vec![0.0; self.basis.len()])
    }

    /// Writes every surrogate's value at `x` into `out`.
    pub fn eval_into(&self, scratch: &mut (UnivariateTable, Vec<f64>), x: &[f64], out: &mut [f64]) {
        if self.rows.is_empty() {
            return;
        }
        let (table, terms) = scratch;
        self.basis.eval_into(table, x, terms);
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(k, c)| c * terms[k]).sum();
        }
    }
}
