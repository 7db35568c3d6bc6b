use mlcv_core::pce::basis::design_matrix;
use mlcv_core::pce::legendre::{gauss_legendre, orthonormal_legendre_value};
use mlcv_core::pce::*;
use mlcv_core::sampling::{iid_sample, lhs_sample, AnnealConfig, InputSpace, Purpose, RngStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space() -> InputSpace {
    InputSpace::new(vec![(-2.0, 1.0), (0.5, 4.5)]).unwrap()
}

fn random_surrogate(seed: u64, degree: usize) -> PcSurrogate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = total_degree_set(2, degree);
    let coeffs = indices.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    PcSurrogate::new(space(), indices, coeffs, Provenance::default()).unwrap()
}

#[test]
fn basis_is_orthonormal_under_uniform_measure() {
    let s = space();
    let indices = total_degree_set(2, 5);
    let (t, w) = gauss_legendre(8);
    let map = |k: usize, u: f64| {
        let (a, b) = s.bounds()[k];
        a + (b - a) * 0.5 * (u + 1.0)
    };
    let wsum: f64 = w.iter().sum();
    for (a, ia) in indices.iter().enumerate() {
        for (b, ib) in indices.iter().enumerate() {
            let mut g = 0.0;
            for (i, ti) in t.iter().enumerate() {
                for (j, tj) in t.iter().enumerate() {
                    let x = [map(0, *ti), map(1, *tj)];
                    g += w[i] * w[j] / (wsum * wsum) * basis_eval(&s, ia, &x) * basis_eval(&s, ib, &x);
                }
            }
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((g - expected).abs() < 1e-10, "{ia:?} {ib:?}: {g}");
        }
    }
}

#[test]
fn legendre_matches_closed_forms() {
    for t in [-1.0, -0.3, 0.0, 0.45, 1.0] {
        assert!((orthonormal_legendre_value(1, t) - 3f64.sqrt() * t).abs() < 1e-14);
        let p2 = 0.5 * (3.0 * t * t - 1.0);
        assert!((orthonormal_legendre_value(2, t) - 5f64.sqrt() * p2).abs() < 1e-14);
        let p3 = 0.5 * (5.0 * t * t * t - 3.0 * t);
        assert!((orthonormal_legendre_value(3, t) - 7f64.sqrt() * p3).abs() < 1e-14);
    }
}

struct Draws {
    a: Vec<f64>,
    b: Vec<f64>,
}

fn draws(a: &PcSurrogate, b: &PcSurrogate, n: usize) -> Draws {
    let pts = iid_sample(a.space(), n, RngStream::keyed(77, 0, 0, Purpose::Test)).unwrap();
    Draws {
        a: a.eval_doe(&pts),
        b: b.eval_doe(&pts),
    }
}

/// Mean and standard error of a sample.
fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn within_3se(sample: &[f64], exact: f64, what: &str) {
    let (m, se) = mean_se(sample);
    assert!((m - exact).abs() < 3.0 * se, "{what}: {m} vs {exact} (se {se})");
}

#[test]
fn moments_match_sampling() {
    let a = random_surrogate(1, 3);
    let b = random_surrogate(2, 2);
    let d = draws(&a, &b, 1_000_000);
    let (mean, var) = pc_moments(&a);
    within_3se(&d.a, mean, "mean");
    let sq: Vec<f64> = d.a.iter().map(|v| (v - mean).powi(2)).collect();
    within_3se(&sq, var, "variance");
    let (mb, _) = pc_moments(&b);
    let prod: Vec<f64> = d.a.iter().zip(&d.b).map(|(x, y)| (x - mean) * (y - mb)).collect();
    within_3se(&prod, pc_covariance(&a, &b).unwrap(), "covariance");
}

#[test]
fn centered_square_covariance_matches_sampling() {
    let a = random_surrogate(3, 2);
    let b = random_surrogate(4, 3);
    let phi = galerkin_tensor(&[a.indices(), b.indices()].concat(), 8).unwrap();
    let exact = centered_square_covariance(&a, &b, &phi).unwrap();
    let d = draws(&a, &b, 1_000_000);
    let (ma, va) = pc_moments(&a);
    let (mb, vb) = pc_moments(&b);
    let prod: Vec<f64> = d
        .a
        .iter()
        .zip(&d.b)
        .map(|(x, y)| ((x - ma).powi(2) - va) * ((y - mb).powi(2) - vb))
        .collect();
    within_3se(&prod, exact, "square covariance");
    let self_cov = centered_square_covariance(&a, &a, &phi).unwrap();
    let sq: Vec<f64> = d.a.iter().map(|x| ((x - ma).powi(2) - va).powi(2)).collect();
    within_3se(&sq, self_cov, "square variance");
}

#[test]
fn galerkin_tensor_rejects_low_order() {
    let a = random_surrogate(5, 3);
    assert!(galerkin_tensor(a.indices(), 6).is_err());
    assert!(galerkin_tensor(a.indices(), 7).is_ok());
}

#[test]
fn lars_enters_the_true_support_first() {
    let s = space();
    let indices = total_degree_set(2, 4);
    let basis = Basis::new(s.clone(), indices.clone());
    let doe = iid_sample(&s, 200, RngStream::keyed(6, 0, 0, Purpose::Doe)).unwrap();
    let x = design_matrix(&basis, &doe);
    let truth = [(3usize, 2.0), (9, -1.5), (12, 0.7)];
    let y: Vec<f64> = (0..doe.len())
        .map(|i| truth.iter().map(|&(j, c)| c * x.col(j)[i]).sum())
        .collect();
    let order = lars_select(&x, &y);
    let mut first: Vec<usize> = order[..3].to_vec();
    first.sort();
    assert_eq!(first, vec![3, 9, 12]);
}

#[test]
fn least_squares_reproduces_a_polynomial() {
    let truth = random_surrogate(7, 3);
    let doe = lhs_sample(truth.space(), 60, RngStream::keyed(7, 0, 0, Purpose::Doe), AnnealConfig::default()).unwrap();
    let y = truth.eval_doe(&doe);
    let fit = ols_fit(&doe, &y, total_degree_set(2, 3)).unwrap();
    for (c, t) in fit.coeffs().iter().zip(truth.coeffs()) {
        assert!((c - t).abs() < 1e-9);
    }
    let adaptive = adaptive_fit(&doe, &y, &AdaptiveConfig::default()).unwrap();
    let test = iid_sample(truth.space(), 1000, RngStream::keyed(7, 0, 0, Purpose::Test)).unwrap();
    let q = q2(&adaptive, |x| truth.eval(x), &test).unwrap();
    assert!(q > 1.0 - 1e-8, "{q}");
}

#[test]
fn difference_and_serialization() {
    let a = random_surrogate(8, 3);
    let b = random_surrogate(9, 2);
    let d = a.sub(&b).unwrap();
    let x = [0.1, 2.0];
    assert!((d.eval(&x) - (a.eval(&x) - b.eval(&x))).abs() < 1e-12);
    let back = PcSurrogate::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back.eval(&x), a.eval(&x));
    let other = PcSurrogate::new(InputSpace::unit(2).unwrap(), total_degree_set(2, 1), vec![0.0; 3], Provenance::default())
        .unwrap();
    assert!(a.sub(&other).is_err());
    assert!(pc_covariance(&a, &other).is_err());
}

#[test]
fn q2_of_a_perfect_and_a_constant_predictor() {
    let truth = vec![1.0, 2.0, 4.0, 8.0];
    assert_eq!(q2_values(&truth, &truth).unwrap(), 1.0);
    let m = truth.iter().sum::<f64>() / 4.0;
    assert!(q2_values(&[m; 4], &truth).unwrap().abs() < 1e-12);
}
