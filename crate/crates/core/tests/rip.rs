use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wl1_core::linalg::{max_singular_value, spectral_extremes_symmetric, DenseMatrix};
use wl1_core::model::Rational;
use wl1_core::rip::{
    check_lemma1_with_theta, check_lemma3, compute_delta, compute_theta, delta_of_support,
    randomized_lower_bound_delta, randomized_lower_bound_theta, theta_of_supports, LEMMA_TOLERANCE,
};

fn gaussian(rng: &mut ChaCha8Rng, n: usize, big_n: usize) -> DenseMatrix {
    let mut a = DenseMatrix::from_fn(n, big_n, |_, _| rng.sample(StandardNormal));
    a.normalize_columns();
    a
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn sub_gram(a: &DenseMatrix, s: &[usize], t: &[usize]) -> DMatrix<f64> {
    let g = to_na(a).transpose() * to_na(a);
    DMatrix::from_fn(s.len(), t.len(), |i, j| g[(s[i], t[j])])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_extremes_match_nalgebra(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DenseMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let sym = DenseMatrix::from_fn(n, n, |i, j| b.get(i, j) + b.get(j, i));
        let (lo, hi) = spectral_extremes_symmetric(&sym).unwrap();
        let eig = nalgebra::SymmetricEigen::new(to_na(&sym)).eigenvalues;
        prop_assert!((lo - eig.min()).abs() < 1e-9);
        prop_assert!((hi - eig.max()).abs() < 1e-9);
    }

    #[test]
    fn largest_singular_value_matches_nalgebra(seed in any::<u64>(), n in 1usize..7, m in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal));
        let want = to_na(&a).singular_values().max();
        prop_assert!((max_singular_value(&a).unwrap() - want).abs() < 1e-9 * (1.0 + want));
    }

    #[test]
    fn support_constants_match_nalgebra(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, 6, 10);
        let gram = a.gram();
        let s = [1, 4, 7];
        let t = [0, 9];
        let eig = nalgebra::SymmetricEigen::new(sub_gram(&a, &s, &s)).eigenvalues;
        let want_delta = (eig.max() - 1.0).abs().max((1.0 - eig.min()).abs());
        prop_assert!((delta_of_support(&gram, &s) - want_delta).abs() < 1e-9);
        let want_theta = sub_gram(&a, &s, &t).singular_values().max();
        prop_assert!((theta_of_supports(&gram, &s, &t) - want_theta).abs() < 1e-9);
    }

    #[test]
    fn theta_is_symmetric_in_its_orders(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, 6, 12);
        let t12 = compute_theta(&a, 1, 2).unwrap().value;
        let t21 = compute_theta(&a, 2, 1).unwrap().value;
        prop_assert!((t12 - t21).abs() < 1e-10);
    }

    #[test]
    fn definition_restated(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, 6, 10);
        let theta = compute_theta(&a, 2, 2).unwrap().value;
        let idx = rand::seq::index::sample(&mut rng, 10, 4).into_vec();
        let mut u = vec![0.0; 10];
        let mut v = vec![0.0; 10];
        for &i in &idx[..2] {
            u[i] = rng.sample(StandardNormal);
        }
        for &i in &idx[2..] {
            v[i] = rng.sample(StandardNormal);
        }
        let (u, v) = (nalgebra::DVector::from_vec(u), nalgebra::DVector::from_vec(v));
        let na = to_na(&a);
        let (au, av) = (&na * &u, &na * &v);
        let rhs = theta * u.norm() * v.norm();
        prop_assert!(au.dot(&av).abs() <= rhs + 1e-10);
    }

    #[test]
    fn lower_bounds_never_exceed_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, 5, 9);
        let delta = compute_delta(&a, 2).unwrap().value;
        let theta = compute_theta(&a, 2, 1).unwrap().value;
        let few = randomized_lower_bound_delta(&a, 2, 1, seed).unwrap();
        let many = randomized_lower_bound_delta(&a, 2, 1000, seed).unwrap();
        prop_assert!(few <= many + 1e-15);
        prop_assert!(many <= delta + 1e-10);
        prop_assert!(randomized_lower_bound_theta(&a, 2, 1, 300, seed).unwrap() <= theta + 1e-10);
    }
}

#[test]
fn argmax_witness_reproduces_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a = gaussian(&mut rng, 8, 16);
    let gram = a.gram();
    for k in 1..=3 {
        let d = compute_delta(&a, k).unwrap();
        assert!((delta_of_support(&gram, &d.argmax_support) - d.value).abs() < 1e-10);
    }
    let t = compute_theta(&a, 2, 2).unwrap();
    let (s, u) = &t.argmax_supports;
    assert!((theta_of_supports(&gram, s, u) - t.value).abs() < 1e-10);
}

#[test]
fn lower_bound_below_enumeration_on_larger_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let a = gaussian(&mut rng, 20, 40);
    let exact = compute_delta(&a, 2).unwrap().value;
    let lb = randomized_lower_bound_delta(&a, 2, 500, 1).unwrap();
    assert!(lb <= exact + 1e-10);
}

#[test]
fn constants_are_monotone_in_their_orders() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let a = gaussian(&mut rng, 8, 16);
        let deltas: Vec<f64> = (1..=4)
            .map(|k| compute_delta(&a, k).unwrap().value)
            .collect();
        assert!(
            deltas.windows(2).all(|w| w[0] <= w[1] + 1e-10),
            "{deltas:?}"
        );
        for k1 in 1..=3 {
            let row: Vec<f64> = (1..=3)
                .map(|k2| compute_theta(&a, k1, k2).unwrap().value)
                .collect();
            assert!(row.windows(2).all(|w| w[0] <= w[1] + 1e-10), "{row:?}");
        }
    }
}

#[test]
fn lemma1_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let a = gaussian(&mut rng, 8, 16);
    for (k1, k2) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        let theta = compute_theta(&a, k1, k2).unwrap();
        for _ in 0..500 {
            let idx = rand::seq::index::sample(&mut rng, 16, 16).into_vec();
            let mut u = vec![0.0; 16];
            for &i in &idx[..k1] {
                u[i] = rng.sample(StandardNormal);
            }
            // v spread over the remaining indices with |v|_inf <= lambda, |v|_1 <= lambda k2
            let lambda: f64 = rng.random_range(0.1..2.0);
            let mut v = vec![0.0; 16];
            let mut budget = lambda * k2 as f64;
            for &i in &idx[k1..] {
                let mag = rng.random_range(0.0..=lambda).min(budget);
                budget -= mag;
                v[i] = if rng.random_bool(0.5) { mag } else { -mag };
            }
            let w = check_lemma1_with_theta(&a, &u, &v, &theta, lambda).unwrap();
            assert!(w.holds, "{w:?}");
        }
    }
}

#[test]
fn lemma3_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let a = gaussian(&mut rng, 8, 16);
        for k in 1..=2 {
            for tau in [2, 3] {
                let w = check_lemma3(&a, k, 1, Rational::integer(tau)).unwrap();
                assert!(w.holds, "{w:?}");
            }
            let w = check_lemma3(&a, k, 1, Rational::one()).unwrap();
            assert!((w.theta_scaled - w.rhs).abs() <= LEMMA_TOLERANCE);
        }
    }
    let eye = DenseMatrix::identity(8);
    let w = check_lemma3(&eye, 2, 1, Rational::integer(2)).unwrap();
    assert_eq!((w.theta_scaled, w.rhs), (0.0, 0.0));
    assert!(check_lemma3(&eye, 1, 1, Rational::new(1, 2).unwrap()).is_err());
    assert!(check_lemma3(&eye, 1, 1, Rational::new(3, 2).unwrap()).is_err());
}
