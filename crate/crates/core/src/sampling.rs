//! Random streams, experimental designs and their uniformity measures.
//!
//! Every random quantity in the crate is drawn from an [`RngStream`], a
//! counter-style ChaCha stream keyed by a seed and a structured
//! [`StreamId`]. Two streams with different ids never share output, so the
//! per-level independence that multilevel estimators rely on holds
//! structurally.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product of closed intervals on which independent uniform inputs live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpace {
    bounds: Vec<(f64, f64)>,
}

impl InputSpace {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidSpace("at least one dimension required".into()));
        }
        for (i, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidSpace(format!(
                    "dimension {} has bounds [{a}, {b}]",
                    i + 1
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// The unit hypercube `[0,1]^d`.
    pub fn unit(dims: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); dims])
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect()
    }

    /// Per-coordinate variances of the uniform distribution on the space.
    pub fn variances(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(a, b)| (b - a) * (b - a) / 12.0)
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(&self.bounds)
                .all(|(&v, &(a, b))| v >= a && v <= b)
    }

    /// Affine map of `x` onto `[0,1]^d`.
    pub fn to_unit(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &v), &(a, b)) in out.iter_mut().zip(x).zip(&self.bounds) {
            *o = (v - a) / (b - a);
        }
    }
}

/// What a stream is used for; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Estimation,
    Pilot,
    Doe,
    Anneal,
    Subset,
    Test,
    Correlation,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Estimation => 1,
            Purpose::Pilot => 2,
            Purpose::Doe => 3,
            Purpose::Anneal => 4,
            Purpose::Subset => 5,
            Purpose::Test => 6,
            Purpose::Correlation => 7,
        }
    }
}

/// Structured key of a random stream: `(level, replicate, purpose)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub level: u32,
    pub replicate: u64,
    pub purpose: Purpose,
}

impl StreamId {
    pub const MAX_LEVEL: u32 = (1 << 16) - 1;
    pub const MAX_REPLICATE: u64 = (1 << 40) - 1;

    pub fn new(level: u32, replicate: u64, purpose: Purpose) -> Self {
        Self {
            level,
            replicate,
            purpose,
        }
    }

    /// Packs the id into a ChaCha stream number; distinct ids map to
    /// distinct numbers.
    fn encode(&self) -> u64 {
        assert!(self.level <= Self::MAX_LEVEL, "level index too large");
        assert!(
            self.replicate <= Self::MAX_REPLICATE,
            "replicate index too large"
        );
        (self.purpose.tag() << 56) | (u64::from(self.level) << 40) | self.replicate
    }
}

/// A reproducible, independently keyed random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub id: StreamId,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        Self { seed, id }
    }

    pub fn keyed(seed: u64, level: u32, replicate: u64, purpose: Purpose) -> Self {
        Self::new(seed, StreamId::new(level, replicate, purpose))
    }

    /// Fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id.encode());
        rng
    }

    /// Derived stream for the `index`-th sub-task (e.g. one candidate in a pool).
    pub fn child(&self, index: u64) -> RngStream {
        let seed = splitmix64(self.seed ^ splitmix64(self.id.encode() ^ splitmix64(index)));
        RngStream::new(seed, self.id)
    }
}

/// SplitMix64 finalizer; used to derive seeds from structured keys.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a string label into a seed.
pub fn seed_from_label(seed: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(splitmix64(seed), |acc, b| splitmix64(acc ^ u64::from(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoeKind {
    Iid,
    Lhs,
    NestedSubset,
}

/// A design of experiments: `n` points of an [`InputSpace`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Doe {
    space: InputSpace,
    points: Vec<f64>,
    seed: u64,
    kind: DoeKind,
}

/// Sidecar record stored next to a design's CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoeMeta {
    pub seed: u64,
    pub kind: DoeKind,
    pub bounds: Vec<(f64, f64)>,
}

impl Doe {
    pub fn from_rows(space: InputSpace, rows: &[Vec<f64>], seed: u64, kind: DoeKind) -> Result<Self> {
        let d = space.dims();
        let mut points = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::Parse(format!(
                    "row of length {} in a {d}-dimensional design",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Ok(Self {
            space,
            points,
            seed,
            kind,
        })
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.space.dims()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.space.dims()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> DoeKind {
        self.kind
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dims();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dims())
    }

    /// Design made of the given rows of `self`, in the given order.
    pub fn select(&self, rows: &[usize], kind: DoeKind) -> Doe {
        let mut points = Vec::with_capacity(rows.len() * self.dims());
        for &i in rows {
            points.extend_from_slice(self.row(i));
        }
        Doe {
            space: self.space.clone(),
            points,
            seed: self.seed,
            kind,
        }
    }

    fn unit_points(&self) -> Vec<f64> {
        let d = self.dims();
        let mut out = vec![0.0; self.points.len()];
        for (src, dst) in self.points.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            self.space.to_unit(src, dst);
        }
        out
    }

    pub fn meta(&self) -> DoeMeta {
        DoeMeta {
            seed: self.seed,
            kind: self.kind,
            bounds: self.space.bounds().to_vec(),
        }
    }

    /// Writes `x1,...,xd` followed by one row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dims()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, meta: &DoeMeta) -> Result<Self> {
        let space = InputSpace::new(meta.bounds.clone())?;
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing CSV header".into()))??;
        let expected: Vec<String> = (1..=space.dims()).map(|i| format!("x{i}")).collect();
        if header.trim() != expected.join(",") {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad value `{c}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Doe::from_rows(space, &rows, meta.seed, meta.kind)
    }
}

/// `n` independent uniform points.
pub fn iid_sample(space: &InputSpace, n: usize, stream: RngStream) -> Result<Doe> {
    if n == 0 {
        return Err(Error::EmptyDesign {
            required: 1,
            got: 0,
        });
    }
    let mut rng = stream.rng();
    let mut points = Vec::with_capacity(n * space.dims());
    for _ in 0..n {
        fill_uniform(space, &mut rng, &mut points);
    }
    Ok(Doe {
        space: space.clone(),
        points,
        seed: stream.seed,
        kind: DoeKind::Iid,
    })
}

/// Appends one uniform point of `space` to `out`.
pub fn fill_uniform<R: Rng>(space: &InputSpace, rng: &mut R, out: &mut Vec<f64>) {
    for &(a, b) in space.bounds() {
        out.push(a + (b - a) * rng.random::<f64>());
    }
}

/// Simulated-annealing schedule for LHS improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub iterations: usize,
    /// Starting temperature as a fraction of the initial discrepancy.
    pub initial_temperature: f64,
    /// Geometric cooling factor applied after every proposal.
    pub cooling: f64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            initial_temperature: 1e-3,
            cooling: 0.9995,
        }
    }
}

/// Latin hypercube design improved by simulated annealing on the centered
/// L2 discrepancy.
///
/// Moves swap two entries of one column, which keeps the design a valid LHS.
/// The best design visited is returned, so the result is never worse than
/// the initial random LHS.
pub fn lhs_sample(space: &InputSpace, n: usize, stream: RngStream, anneal: AnnealConfig) -> Result<Doe> {
    if n < 2 {
        return Err(Error::EmptyDesign { required: 2, got: n });
    }
    let d = space.dims();
    let mut rng = stream.rng();
    let mut unit = vec![0.0; n * d];
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..d {
        perm.shuffle(&mut rng);
        for i in 0..n {
            unit[i * d + k] = (perm[i] as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    let initial = unit.clone();
    if anneal.iterations > 0 {
        let mut state = AnnealState::new(unit, n, d);
        let start = state.value();
        let mut best = state.z.clone();
        let mut best_value = start;
        let mut temperature = anneal.initial_temperature * start.abs().max(f64::MIN_POSITIVE);
        for _ in 0..anneal.iterations {
            let k = rng.random_range(0..d);
            let i1 = rng.random_range(0..n);
            let mut i2 = rng.random_range(0..n - 1);
            if i2 >= i1 {
                i2 += 1;
            }
            let delta = state.swap_delta(i1, i2, k);
            let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp();
            if accept {
                state.apply_swap(i1, i2, k);
                let v = state.value();
                if v < best_value {
                    best_value = v;
                    best.copy_from_slice(&state.z);
                }
            }
            temperature *= anneal.cooling;
        }
        unit = best;
    }
    // Incremental updates drift slightly; settle the comparison exactly.
    if centered_l2_unit(&unit, n, d) > centered_l2_unit(&initial, n, d) {
        unit = initial;
    }
    let mut points = vec![0.0; n * d];
    for i in 0..n {
        for (k, &(a, b)) in space.bounds().iter().enumerate() {
            points[i * d + k] = a + (b - a) * unit[i * d + k];
        }
    }
    Ok(Doe {
        space: space.clone(),
        points,
        seed: stream.seed,
        kind: DoeKind::Lhs,
    })
}

/// Hickernell's centered L2 discrepancy (squared) of a design, computed on
/// coordinates rescaled to the unit cube.
pub fn centered_l2_discrepancy(doe: &Doe) -> Result<f64> {
    if doe.is_empty() {
        return Err(Error::EmptyDesign {
            required: 1,
            got: 0,
        });
    }
    Ok(centered_l2_unit(&doe.unit_points(), doe.len(), doe.dims()))
}

fn single_term(z: &[f64]) -> f64 {
    z.iter()
        .map(|&v| {
            let t = (v - 0.5).abs();
            1.0 + 0.5 * t - 0.5 * t * t
        })
        .product()
}

#[inline]
fn pair_factor(a: f64, b: f64) -> f64 {
    1.0 + 0.5 * (a - 0.5).abs() + 0.5 * (b - 0.5).abs() - 0.5 * (a - b).abs()
}

fn pair_term(zi: &[f64], zj: &[f64]) -> f64 {
    zi.iter().zip(zj).map(|(&a, &b)| pair_factor(a, b)).product()
}

fn centered_l2_unit(z: &[f64], n: usize, d: usize) -> f64 {
    let nf = n as f64;
    let mut single = 0.0;
    let mut pairs = 0.0;
    for i in 0..n {
        let zi = &z[i * d..(i + 1) * d];
        single += single_term(zi);
        pairs += pair_term(zi, zi);
        for j in (i + 1)..n {
            pairs += 2.0 * pair_term(zi, &z[j * d..(j + 1) * d]);
        }
    }
    (13.0f64 / 12.0).powi(d as i32) - 2.0 / nf * single + pairs / (nf * nf)
}

/// Cached single and pairwise products for O(n) swap updates.
struct AnnealState {
    z: Vec<f64>,
    n: usize,
    d: usize,
    single: Vec<f64>,
    pairs: Vec<f64>,
    single_sum: f64,
    pair_sum: f64,
}

impl AnnealState {
    fn new(z: Vec<f64>, n: usize, d: usize) -> Self {
        let single: Vec<f64> = (0..n).map(|i| single_term(&z[i * d..(i + 1) * d])).collect();
        let mut pairs = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = pair_term(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]);
                pairs[i * n + j] = v;
                pairs[j * n + i] = v;
            }
        }
        let single_sum = single.iter().sum();
        let pair_sum = pairs.iter().sum();
        Self {
            z,
            n,
            d,
            single,
            pairs,
            single_sum,
            pair_sum,
        }
    }

    fn value(&self) -> f64 {
        let nf = self.n as f64;
        (13.0f64 / 12.0).powi(self.d as i32) - 2.0 / nf * self.single_sum + self.pair_sum / (nf * nf)
    }

    fn single_factor(v: f64) -> f64 {
        let t = (v - 0.5).abs();
        1.0 + 0.5 * t - 0.5 * t * t
    }

    /// New single terms and pair rows for `i1`, `i2` after swapping column `k`.
    fn swapped(&self, i1: usize, i2: usize, k: usize) -> (f64, f64, f64) {
        let (n, d) = (self.n, self.d);
        let a = self.z[i1 * d + k];
        let b = self.z[i2 * d + k];
        let s1 = self.single[i1] * Self::single_factor(b) / Self::single_factor(a);
        let s2 = self.single[i2] * Self::single_factor(a) / Self::single_factor(b);
        let mut delta_pairs = 0.0;
        for j in 0..n {
            if j == i1 || j == i2 {
                continue;
            }
            let c = self.z[j * d + k];
            let p1 = self.pairs[i1 * n + j];
            let p2 = self.pairs[i2 * n + j];
            delta_pairs += p1 * (pair_factor(b, c) / pair_factor(a, c) - 1.0)
                + p2 * (pair_factor(a, c) / pair_factor(b, c) - 1.0);
        }
        delta_pairs *= 2.0;
        delta_pairs += self.pairs[i1 * n + i1] * (pair_factor(b, b) / pair_factor(a, a) - 1.0)
            + self.pairs[i2 * n + i2] * (pair_factor(a, a) / pair_factor(b, b) - 1.0);
        (s1, s2, delta_pairs)
    }

    fn swap_delta(&self, i1: usize, i2: usize, k: usize) -> f64 {
        let (s1, s2, dp) = self.swapped(i1, i2, k);
        let nf = self.n as f64;
        let ds = s1 + s2 - self.single[i1] - self.single[i2];
        -2.0 / nf * ds + dp / (nf * nf)
    }

    fn apply_swap(&mut self, i1: usize, i2: usize, k: usize) {
        let (n, d) = (self.n, self.d);
        let (s1, s2, dp) = self.swapped(i1, i2, k);
        let a = self.z[i1 * d + k];
        let b = self.z[i2 * d + k];
        for j in 0..n {
            if j == i1 || j == i2 {
                continue;
            }
            let c = self.z[j * d + k];
            let p1 = self.pairs[i1 * n + j] * pair_factor(b, c) / pair_factor(a, c);
            let p2 = self.pairs[i2 * n + j] * pair_factor(a, c) / pair_factor(b, c);
            self.pairs[i1 * n + j] = p1;
            self.pairs[j * n + i1] = p1;
            self.pairs[i2 * n + j] = p2;
            self.pairs[j * n + i2] = p2;
        }
        self.pairs[i1 * n + i1] *= pair_factor(b, b) / pair_factor(a, a);
        self.pairs[i2 * n + i2] *= pair_factor(a, a) / pair_factor(b, b);
        self.single_sum += s1 + s2 - self.single[i1] - self.single[i2];
        self.single[i1] = s1;
        self.single[i2] = s2;
        self.pair_sum += dp;
        self.z[i1 * d + k] = b;
        self.z[i2 * d + k] = a;
    }
}

/// Row subset of `parent` of size `m` with the smallest centered L2
/// discrepancy among `pool` uniformly drawn candidate subsets.
///
/// Candidates are drawn from per-candidate child streams, so the result does
/// not depend on how the pool is split across threads. Ties keep the lowest
/// candidate index.
pub fn nested_subset(parent: &Doe, m: usize, pool: usize, stream: RngStream) -> Result<Doe> {
    let n = parent.len();
    if m > n {
        return Err(Error::SubsetTooLarge {
            requested: m,
            available: n,
        });
    }
    if m == 0 || pool == 0 {
        return Err(Error::EmptyDesign { required: 1, got: 0 });
    }
    if m == n {
        let all: Vec<usize> = (0..n).collect();
        return Ok(parent.select(&all, DoeKind::NestedSubset));
    }
    let d = parent.dims();
    let z = parent.unit_points();
    let single: Vec<f64> = (0..n).map(|i| single_term(&z[i * d..(i + 1) * d])).collect();
    let mut pairs = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = pair_term(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]);
            pairs[i * n + j] = v;
            pairs[j * n + i] = v;
        }
    }
    let mf = m as f64;
    let base = (13.0f64 / 12.0).powi(d as i32);
    let evaluate = |c: usize| -> (f64, usize, Vec<usize>) {
        let mut rng = stream.child(c as u64).rng();
        let mut idx: Vec<usize> = (0..n).collect();
        let (chosen, _) = idx.partial_shuffle(&mut rng, m);
        let mut subset = chosen.to_vec();
        subset.sort_unstable();
        let s: f64 = subset.iter().map(|&i| single[i]).sum();
        let mut p = 0.0;
        for &i in &subset {
            let row = &pairs[i * n..(i + 1) * n];
            p += subset.iter().map(|&j| row[j]).sum::<f64>();
        }
        (base - 2.0 / mf * s + p / (mf * mf), c, subset)
    };
    let best = (0..pool)
        .into_par_iter()
        .map(|c| {
            let (v, c, _) = evaluate(c);
            (v, c)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let (_, _, subset) = evaluate(best.1);
    Ok(parent.select(&subset, DoeKind::NestedSubset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(seed: u64) -> RngStream {
        RngStream::keyed(seed, 0, 0, Purpose::Doe)
    }

    #[test]
    fn iid_is_reproducible_and_in_bounds() {
        let space = InputSpace::unit(1).unwrap();
        let a = iid_sample(&space, 3, stream(7)).unwrap();
        let b = iid_sample(&space, 3, stream(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.rows().all(|r| space.contains(r)));
    }

    #[test]
    fn empty_requests_fail() {
        let space = InputSpace::unit(2).unwrap();
        assert!(matches!(
            iid_sample(&space, 0, stream(1)),
            Err(Error::EmptyDesign { .. })
        ));
        assert!(lhs_sample(&space, 1, stream(1), AnnealConfig::default()).is_err());
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(InputSpace::new(vec![(1.0, 1.0)]).is_err());
        assert!(InputSpace::new(vec![]).is_err());
    }

    #[test]
    fn discrepancy_single_center_point() {
        let space = InputSpace::unit(1).unwrap();
        let doe = Doe::from_rows(space, &[vec![0.5]], 0, DoeKind::Iid).unwrap();
        let v = centered_l2_discrepancy(&doe).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn lhs_columns_are_stratified() {
        let space = InputSpace::unit(2).unwrap();
        let doe = lhs_sample(&space, 8, stream(3), AnnealConfig::default()).unwrap();
        for k in 0..2 {
            let mut strata: Vec<usize> = doe.rows().map(|r| (r[k] * 8.0).floor() as usize).collect();
            strata.sort_unstable();
            assert_eq!(strata, (0..8).collect::<Vec<_>>());
        }
    }

    #[test]
    fn incremental_swap_matches_recomputation() {
        let mut rng = stream(11).rng();
        let (n, d) = (12, 3);
        let z: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let mut state = AnnealState::new(z, n, d);
        for _ in 0..50 {
            let k = rng.random_range(0..d);
            let i1 = rng.random_range(0..n);
            let i2 = (i1 + 1 + rng.random_range(0..n - 1)) % n;
            let before = state.value();
            let delta = state.swap_delta(i1, i2, k);
            state.apply_swap(i1, i2, k);
            let exact = centered_l2_unit(&state.z, n, d);
            assert!((before + delta - exact).abs() < 1e-12);
            assert!((state.value() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_of_full_size_is_parent() {
        let space = InputSpace::unit(2).unwrap();
        let parent = iid_sample(&space, 10, stream(5)).unwrap();
        let sub = nested_subset(&parent, 10, 3, stream(6)).unwrap();
        assert_eq!(sub.rows().collect::<Vec<_>>(), parent.rows().collect::<Vec<_>>());
        assert!(matches!(
            nested_subset(&parent, 11, 3, stream(6)),
            Err(Error::SubsetTooLarge { .. })
        ));
    }

    #[test]
    fn single_row_subset_minimizes_over_pool() {
        let space = InputSpace::unit(2).unwrap();
        let parent = iid_sample(&space, 6, stream(5)).unwrap();
        // A pool much larger than the parent covers every singleton.
        let sub = nested_subset(&parent, 1, 200, stream(8)).unwrap();
        let best = parent
            .rows()
            .map(|r| {
                let one = Doe::from_rows(space.clone(), &[r.to_vec()], 0, DoeKind::Iid).unwrap();
                centered_l2_discrepancy(&one).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(centered_l2_discrepancy(&sub).unwrap(), best);
    }

    #[test]
    fn csv_round_trip() {
        let space = InputSpace::new(vec![(-1.0, 2.0), (0.0, 0.1)]).unwrap();
        let doe = iid_sample(&space, 5, stream(9)).unwrap();
        let mut buf = Vec::new();
        doe.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x1,x2\n"));
        let back = Doe::read_csv(buf.as_slice(), &doe.meta()).unwrap();
        assert_eq!(back, doe);
    }

    #[test]
    fn distinct_ids_give_distinct_streams() {
        let a = RngStream::keyed(1, 0, 0, Purpose::Estimation).rng().random::<u64>();
        let b = RngStream::keyed(1, 1, 0, Purpose::Estimation).rng().random::<u64>();
        let c = RngStream::keyed(1, 0, 0, Purpose::Pilot).rng().random::<u64>();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
