//! Fourth-order Galerkin product tensor `E[Psi_i Psi_j Psi_q Psi_r]` and the
//! closed-form covariances of products of centered surrogates built on it.

use super::basis::MultiIndex;
use super::legendre::{gauss_legendre, orthonormal_legendre};
use super::surrogate::PcSurrogate;
use crate::error::{Error, Result};

/// Tensorized Galerkin product tensor.
///
/// Entries factor over dimensions, so only the univariate table
/// `E[psi_a psi_b psi_c psi_e]` is stored. It is filled from sorted degree
/// tuples, which makes every entry exactly permutation symmetric.
#[derive(Debug, Clone)]
pub struct GalerkinTensor {
    max_degree: usize,
    stride: usize,
    table: Vec<f64>,
}

impl GalerkinTensor {
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    fn univariate(&self, a: usize, b: usize, c: usize, e: usize) -> f64 {
        let s = self.stride;
        self.table[((a * s + b) * s + c) * s + e]
    }

    /// `Phi_ijqr` for four multi-indices.
    pub fn entry(&self, i: &MultiIndex, j: &MultiIndex, q: &MultiIndex, r: &MultiIndex) -> Result<f64> {
        let mut v = 1.0;
        for k in 0..i.dims() {
            let (a, b, c, e) = (i.0[k] as usize, j.0[k] as usize, q.0[k] as usize, r.0[k] as usize);
            let m = a.max(b).max(c).max(e);
            if m > self.max_degree {
                return Err(Error::MissingTensorEntry {
                    covered: self.max_degree,
                    needed: m,
                });
            }
            v *= self.univariate(a, b, c, e);
        }
        Ok(v)
    }

    fn covers(&self, s: &PcSurrogate) -> Result<()> {
        let needed = s
            .indices()
            .iter()
            .flat_map(|i| i.0.iter().map(|&b| b as usize))
            .max()
            .unwrap_or(0);
        if needed > self.max_degree {
            return Err(Error::MissingTensorEntry {
                covered: self.max_degree,
                needed,
            });
        }
        Ok(())
    }
}

/// Galerkin tensor covering every index in `indices`, computed with an
/// `order`-point Gauss-Legendre rule per dimension.
pub fn galerkin_tensor(indices: &[MultiIndex], order: usize) -> Result<GalerkinTensor> {
    let p = indices
        .iter()
        .flat_map(|i| i.0.iter().map(|&b| b as usize))
        .max()
        .unwrap_or(0);
    galerkin_tensor_degree(p, order)
}

/// Galerkin tensor for all univariate degrees up to `p`.
pub fn galerkin_tensor_degree(p: usize, order: usize) -> Result<GalerkinTensor> {
    let required = 2 * p + 1;
    if order < required {
        return Err(Error::QuadratureOrder { order, required });
    }
    let (nodes, weights) = gauss_legendre(order);
    let stride = p + 1;
    let mut values = vec![0.0; order * stride];
    for (m, &t) in nodes.iter().enumerate() {
        orthonormal_legendre(t, &mut values[m * stride..(m + 1) * stride]);
    }
    let mut table = vec![0.0; stride.pow(4)];
    for a in 0..stride {
        for b in a..stride {
            for c in b..stride {
                for e in c..stride {
                    let v: f64 = (0..order)
                        .map(|m| {
                            let row = &values[m * stride..(m + 1) * stride];
                            weights[m] * row[a] * row[b] * row[c] * row[e]
                        })
                        .sum();
                    for [w, x, y, z] in permutations([a, b, c, e]) {
                        table[((w * stride + x) * stride + y) * stride + z] = v;
                    }
                }
            }
        }
    }
    Ok(GalerkinTensor {
        max_degree: p,
        stride,
        table,
    })
}

fn permutations(v: [usize; 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    if i != j && i != k && i != l && j != k && j != l && k != l {
                        out.push([v[i], v[j], v[k], v[l]]);
                    }
                }
            }
        }
    }
    out
}

/// `C[a_c b_c, c_c d_c]` where `x_c = x - E[x]`, i.e.
/// `sum a_i b_j c_q d_r (Phi_ijqr - delta_ij delta_qr)` over non-constant terms.
pub fn centered_product_covariance(
    a: &PcSurrogate,
    b: &PcSurrogate,
    c: &PcSurrogate,
    d: &PcSurrogate,
    phi: &GalerkinTensor,
) -> Result<f64> {
    let space = a.space();
    if b.space() != space || c.space() != space || d.space() != space {
        return Err(Error::MismatchedSpaces);
    }
    for s in [a, b, c, d] {
        phi.covers(s)?;
    }
    let left = term_pairs(a, b);
    let right = term_pairs(c, d);
    let dims = space.dims();
    let mut total = 0.0;
    for &(wl, i, j, same_l) in &left {
        let mut inner = 0.0;
        for &(wr, q, r, same_r) in &right {
            let mut v = 1.0;
            for k in 0..dims {
                v *= phi.univariate(i.0[k] as usize, j.0[k] as usize, q.0[k] as usize, r.0[k] as usize);
                if v == 0.0 {
                    break;
                }
            }
            if same_l && same_r {
                v -= 1.0;
            }
            inner += wr * v;
        }
        total += wl * inner;
    }
    Ok(total)
}

type TermPair<'a> = (f64, &'a MultiIndex, &'a MultiIndex, bool);

fn term_pairs<'a>(x: &'a PcSurrogate, y: &'a PcSurrogate) -> Vec<TermPair<'a>> {
    let mut out = Vec::new();
    for (ix, &cx) in x.indices().iter().zip(x.coeffs()).skip(1) {
        for (iy, &cy) in y.indices().iter().zip(y.coeffs()).skip(1) {
            if cx * cy != 0.0 {
                out.push((cx * cy, ix, iy, ix == iy));
            }
        }
    }
    out
}

/// `C[(Z1 - E Z1)^2, (Z2 - E Z2)^2]`.
pub fn centered_square_covariance(s1: &PcSurrogate, s2: &PcSurrogate, phi: &GalerkinTensor) -> Result<f64> {
    centered_product_covariance(s1, s1, s2, s2, phi)
}

/// The three blocks whose combination `A + B + C + C^T` gives the covariance
/// of the controls `W_m (Z_m + Z~_{m-1})` (centered), where `W_m = h_m`,
/// `Z_m = g_m` and `Z~_{m-1} = g_m - h_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceBlocks {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl DifferenceBlocks {
    pub fn new(h: &[&PcSurrogate], g: &[&PcSurrogate], g_tilde: &[&PcSurrogate], phi: &GalerkinTensor) -> Result<Self> {
        let m = h.len();
        assert!(g.len() == m && g_tilde.len() == m, "one surrogate triple per level");
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![vec![0.0; m]; m];
        let mut c = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                a[i][j] = centered_product_covariance(h[i], g[i], h[j], g[j], phi)?;
                b[i][j] = centered_product_covariance(h[i], g_tilde[i], h[j], g_tilde[j], phi)?;
                c[i][j] = centered_product_covariance(h[i], g_tilde[i], h[j], g[j], phi)?;
            }
        }
        Ok(Self { a, b, c })
    }

    /// `A + B + C + C^T`.
    pub fn sigma(&self) -> Vec<Vec<f64>> {
        let m = self.a.len();
        let mut s = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                s[i][j] = self.a[i][j] + self.b[i][j] + self.c[i][j] + self.c[j][i];
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pce::surrogate::Provenance;
    use crate::sampling::InputSpace;

    fn s1d(coeffs: &[f64]) -> PcSurrogate {
        let idx = (0..coeffs.len()).map(|k| MultiIndex(vec![k as u16])).collect();
        PcSurrogate::new(InputSpace::new(vec![(-1.0, 1.0)]).unwrap(), idx, coeffs.to_vec(), Provenance::default()).unwrap()
    }

    #[test]
    fn basic_entries() {
        let phi = galerkin_tensor_degree(3, 7).unwrap();
        let z = MultiIndex(vec![0]);
        let one = MultiIndex(vec![1]);
        assert!((phi.entry(&z, &z, &z, &z).unwrap() - 1.0).abs() < 1e-14);
        assert!((phi.entry(&one, &one, &one, &one).unwrap() - 1.8).abs() < 1e-13);
        for i in 0..4u16 {
            for j in 0..4u16 {
                let v = phi.entry(&MultiIndex(vec![i]), &MultiIndex(vec![j]), &z, &z).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-13);
            }
        }
        assert!(phi.entry(&MultiIndex(vec![4]), &z, &z, &z).is_err());
    }

    #[test]
    fn low_order_rejected() {
        assert!(matches!(
            galerkin_tensor_degree(3, 6),
            Err(Error::QuadratureOrder { required: 7, .. })
        ));
    }

    #[test]
    fn square_of_linear_term() {
        let s = s1d(&[0.0, 1.0]);
        let phi = galerkin_tensor(s.indices(), 3).unwrap();
        let v = centered_square_covariance(&s, &s, &phi).unwrap();
        assert!((v - 0.8).abs() < 1e-13);
    }

    #[test]
    fn blocks_match_direct_expansion() {
        let h = s1d(&[0.1, 0.5, -0.2]);
        let g = s1d(&[1.0, 1.0, 0.3, 0.1]);
        let gt = g.sub(&h).unwrap();
        let sum = g.combine(&gt, 1.0).unwrap();
        let phi = galerkin_tensor_degree(3, 7).unwrap();
        let blocks = DifferenceBlocks::new(&[&h], &[&g], &[&gt], &phi).unwrap();
        let direct = centered_product_covariance(&h, &sum, &h, &sum, &phi).unwrap();
        assert!((blocks.sigma()[0][0] - direct).abs() < 1e-12);
    }
}
