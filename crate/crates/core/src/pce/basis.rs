//! Multi-indices, total-degree candidate sets and tensorized Legendre bases.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::legendre::orthonormal_legendre;
use crate::sampling::{Doe, InputSpace};

/// Exponents `(beta_1, ..., beta_d)` of a tensorized basis polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u16>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// `(dimension, exponent)` pairs with nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > 0)
            .map(|(k, &b)| (k, b as usize))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of total degree `<= p`, grouped by degree; within a
/// degree the first exponent decreases, then the second, and so on.
pub fn total_degree_set(d: usize, p: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for t in 0..=p {
        let mut current = vec![0u16; d];
        compositions(t, 0, &mut current, &mut out);
    }
    out
}

fn compositions(remaining: usize, k: usize, current: &mut Vec<u16>, out: &mut Vec<MultiIndex>) {
    let d = current.len();
    if k == d - 1 {
        current[k] = remaining as u16;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for b in (0..=remaining).rev() {
        current[k] = b as u16;
        compositions(remaining - b, k + 1, current, out);
    }
    current[k] = 0;
}

/// Number of multi-indices of total degree `<= p` in `d` dimensions.
pub fn total_degree_count(d: usize, p: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..=p as u128 {
        c = c * (d as u128 + i) / i;
    }
    c as usize
}

/// Per-point table of univariate orthonormal polynomial values.
#[derive(Debug, Clone)]
pub struct UnivariateTable {
    stride: usize,
    values: Vec<f64>,
}

impl UnivariateTable {
    pub fn new(space: &InputSpace, max_degree: usize) -> Self {
        let stride = max_degree + 1;
        Self {
            stride,
            values: vec![0.0; stride * space.dims()],
        }
    }

    /// Recomputes the table at `x` (in problem units).
    pub fn fill(&mut self, space: &InputSpace, x: &[f64]) {
        for (k, (&v, &(a, b))) in x.iter().zip(space.bounds()).enumerate() {
            let t = 2.0 * (v - a) / (b - a) - 1.0;
            orthonormal_legendre(t, &mut self.values[k * self.stride..(k + 1) * self.stride]);
        }
    }

    #[inline]
    pub fn get(&self, dim: usize, degree: usize) -> f64 {
        self.values[dim * self.stride + degree]
    }
}

/// A finite set of basis polynomials, stored sparsely for fast evaluation.
#[derive(Debug, Clone)]
pub struct Basis {
    space: InputSpace,
    indices: Vec<MultiIndex>,
    /// Flattened `(dim, degree)` factors of every index.
    factors: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    max_degree: usize,
}

impl Basis {
    pub fn new(space: InputSpace, indices: Vec<MultiIndex>) -> Self {
        let mut factors = Vec::new();
        let mut offsets = vec![0];
        let mut max_degree = 0;
        for idx in &indices {
            assert_eq!(idx.dims(), space.dims(), "multi-index dimension mismatch");
            for (k, b) in idx.support() {
                factors.push((k as u32, b as u32));
                max_degree = max_degree.max(b);
            }
            offsets.push(factors.len());
        }
        Self {
            space,
            indices,
            factors,
            offsets,
            max_degree,
        }
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn table(&self) -> UnivariateTable {
        UnivariateTable::new(&self.space, self.max_degree)
    }

    /// Value of basis term `j` given a filled table.
    #[inline]
    pub fn term(&self, table: &UnivariateTable, j: usize) -> f64 {
        let mut v = 1.0;
        for &(k, b) in &self.factors[self.offsets[j]..self.offsets[j + 1]] {
            v *= table.get(k as usize, b as usize);
        }
        v
    }

    /// Evaluates every basis term at `x` into `out`.
    pub fn eval_into(&self, table: &mut UnivariateTable, x: &[f64], out: &mut [f64]) {
        table.fill(&self.space, x);
        for (j, o) in out.iter_mut().enumerate().take(self.len()) {
            *o = self.term(table, j);
        }
    }
}

/// Value of a single basis polynomial at `x`.
pub fn basis_eval(space: &InputSpace, index: &MultiIndex, x: &[f64]) -> f64 {
    let max = index.0.iter().copied().max().unwrap_or(0) as usize;
    let mut table = UnivariateTable::new(space, max);
    table.fill(space, x);
    index.support().map(|(k, b)| table.get(k, b)).product()
}

/// Column-major `n x p` matrix.
#[derive(Debug, Clone, Default)]
pub struct ColumnMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ColumnMatrix {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            cols: 0,
            data: Vec::new(),
        }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn push_col(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        self.data.extend_from_slice(values);
        self.cols += 1;
    }
}

/// Appends the columns of `basis` terms `from..` evaluated on `doe` to `m`.
pub fn extend_design(m: &mut ColumnMatrix, basis: &Basis, from: usize, doe: &Doe) {
    let n = doe.len();
    assert_eq!(m.rows, n);
    let new_cols = basis.len() - from;
    let start = m.data.len();
    m.data.resize(start + new_cols * n, 0.0);
    let mut table = basis.table();
    for (i, x) in doe.rows().enumerate() {
        table.fill(basis.space(), x);
        for j in from..basis.len() {
            m.data[start + (j - from) * n + i] = basis.term(&table, j);
        }
    }
    m.cols += new_cols;
}

pub fn design_matrix(basis: &Basis, doe: &Doe) -> ColumnMatrix {
    let mut m = ColumnMatrix::new(doe.len());
    extend_design(&mut m, basis, 0, doe);
    m
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sets() {
        assert_eq!(
            total_degree_set(2, 1),
            vec![
                MultiIndex(vec![0, 0]),
                MultiIndex(vec![1, 0]),
                MultiIndex(vec![0, 1])
            ]
        );
        assert_eq!(total_degree_set(7, 2).len(), 36);
        assert_eq!(total_degree_set(3, 0), vec![MultiIndex::zero(3)]);
        for (d, p) in [(7, 5), (3, 9), (1, 4)] {
            assert_eq!(total_degree_set(d, p).len(), total_degree_count(d, p));
        }
    }

    #[test]
    fn lower_degree_set_is_prefix() {
        let a = total_degree_set(4, 3);
        let b = total_degree_set(4, 4);
        assert_eq!(&b[..a.len()], &a[..]);
    }

    #[test]
    fn constant_term_is_one() {
        let space = InputSpace::new(vec![(-2.0, 5.0), (0.0, 1.0)]).unwrap();
        assert_eq!(basis_eval(&space, &MultiIndex::zero(2), &[1.3, 0.2]), 1.0);
        let space = InputSpace::new(vec![(-1.0, 1.0)]).unwrap();
        assert!((basis_eval(&space, &MultiIndex(vec![1]), &[1.0]) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
