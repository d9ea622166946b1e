mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scitower::numerics::{
    gram, is_sigma_min_above, sigma_min_bisect, sigma_min_quantized, sigma_min_quantized_linear, solve_hpd,
};
use scitower::{ComplexMatrix, C64, DEFAULT_ETA};

fn matrix(seed: u64, rows: usize, cols: usize) -> ComplexMatrix {
    common::random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), rows, cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_test_agrees_with_svd(seed in any::<u64>(), cols in 1usize..8, extra in 0usize..6, eps in 0.01f64..2.0) {
        let b = matrix(seed, cols + extra, cols);
        let s = common::sigma_min(&b);
        prop_assume!((s - eps).abs() > 1e-6);
        prop_assert_eq!(is_sigma_min_above(&b, eps, DEFAULT_ETA).unwrap(), s > eps);
    }

    #[test]
    fn sigma_test_monotone_in_eps(seed in any::<u64>(), n in 1usize..7, e1 in 0.01f64..2.0, e2 in 0.01f64..2.0) {
        let b = matrix(seed, n + 2, n);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        if is_sigma_min_above(&b, hi, DEFAULT_ETA).unwrap() {
            prop_assert!(is_sigma_min_above(&b, lo, DEFAULT_ETA).unwrap());
        }
    }

    #[test]
    fn quantized_value_brackets_sigma(seed in any::<u64>(), n in 1usize..7, m in 1u64..64) {
        let b = matrix(seed, n + 1, n);
        let q = sigma_min_quantized(&b, m).unwrap();
        let s = common::sigma_min(&b);
        prop_assert_eq!(q.m, m);
        prop_assert!(q.value() >= s - 1e-9);
        prop_assert!(q.value() - 1.0 / m as f64 <= s + 1e-9);
        prop_assert_eq!(q, sigma_min_quantized_linear(&b, m, DEFAULT_ETA).unwrap());
    }

    #[test]
    fn bisection_matches_svd(seed in any::<u64>(), n in 1usize..7) {
        let b = matrix(seed, n + 3, n);
        prop_assert!((sigma_min_bisect(&b, 1e-10).unwrap() - common::sigma_min(&b)).abs() < 1e-6);
    }

    #[test]
    fn hpd_solve_has_small_residual(seed in any::<u64>(), n in 1usize..10) {
        let b = matrix(seed, n + 2, n);
        let mut g = gram(&b);
        for i in 0..n {
            g[(i, i)] += C64::new(0.5, 0.0);
        }
        let rhs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = solve_hpd(&g, &rhs, DEFAULT_ETA).unwrap();
        let r: Vec<C64> = g.mul_vec(&x).unwrap().iter().zip(&rhs).map(|(a, b)| a - b).collect();
        prop_assert!(common::l2(&r) <= 1e-9 * (1.0 + common::l2(&rhs)));
        let oracle = common::solve(&g, &rhs);
        let d: Vec<C64> = x.iter().zip(&oracle).map(|(a, b)| a - b).collect();
        prop_assert!(common::l2(&d) <= 1e-8 * (1.0 + common::l2(&oracle)));
    }
}

#[test]
fn rejects_bad_input() {
    let b = matrix(1, 3, 2);
    assert!(is_sigma_min_above(&b, 0.0, DEFAULT_ETA).is_err());
    assert!(is_sigma_min_above(&b, f64::NAN, DEFAULT_ETA).is_err());
    let mut nan = b.clone();
    nan[(0, 0)] = C64::new(f64::NAN, 0.0);
    assert!(is_sigma_min_above(&nan, 0.1, DEFAULT_ETA).is_err());
    assert!(sigma_min_quantized(&b, 0).is_err());
}

#[test]
fn identity_quantizes_to_one() {
    for m in [1, 2, 7, 50] {
        let q = sigma_min_quantized(&ComplexMatrix::identity(4), m).unwrap();
        assert_eq!(q.value(), 1.0);
    }
}
