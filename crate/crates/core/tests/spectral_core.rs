//! Metrics, splitting and summary statistics against naive oracles.

use hsreg_core::{mse, r_squared, split_dataset, summary_stats};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook R² written out with explicit loops and a separate mean pass.
fn r2_oracle(y_hat: &[f64], y: &[f64]) -> f64 {
    let mut mean = 0.0;
    for v in y {
        mean += v;
    }
    mean /= y.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        num += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
        den += (mean - y[i]) * (mean - y[i]);
    }
    1.0 - num / den
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
}

#[test]
fn r_squared_worked_example() {
    let got = r_squared(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(got, r2_oracle(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]));
    assert_eq!(got, 0.5);
}

#[test]
fn mse_matches_two_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let a = random_vec(&mut rng, 10);
        let b = random_vec(&mut rng, 10);
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let oracle = diffs.iter().map(|d| d * d).sum::<f64>() / 10.0;
        assert!((mse(&a, &b).unwrap() - oracle).abs() < 1e-12);
    }
}

#[test]
fn summary_matches_two_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = random_vec(&mut rng, 100);
    let s = summary_stats(&v).unwrap();
    let mean = v.iter().sum::<f64>() / 100.0;
    let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 100.0).sqrt();
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    assert!((s.mean - mean).abs() < 1e-12);
    assert!((s.std - std).abs() < 1e-12);
    assert_eq!(s.min, sorted[0]);
    assert_eq!(s.max, sorted[99]);
}

#[test]
fn published_split_counts() {
    assert_eq!(split_dataset(200, 42).unwrap().sizes(), (140, 20, 40));
    assert_eq!(split_dataset(50, 42).unwrap().sizes(), (35, 5, 10));
}

#[test]
fn split_is_deterministic_and_seed_sensitive() {
    let base = split_dataset(50, 0).unwrap();
    assert_eq!(base, split_dataset(50, 0).unwrap());
    for seed in 1..=100 {
        let other = split_dataset(50, seed).unwrap();
        assert_ne!((&other.train, &other.val, &other.test), (&base.train, &base.val, &base.test), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn r_squared_of_self_is_one(y in prop::collection::vec(-100.0f64..100.0, 2..40)) {
        prop_assume!(y.iter().any(|v| *v != y[0]));
        prop_assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn r_squared_of_mean_is_zero(y in prop::collection::vec(-100.0f64..100.0, 2..40)) {
        prop_assume!(y.iter().any(|v| (v - y[0]).abs() > 1e-6));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let r = r_squared(&vec![mean; y.len()], &y).unwrap();
        prop_assert!(r.abs() < 1e-12);
    }

    #[test]
    fn mse_is_permutation_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..30),
        seed in any::<u64>(),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let mut idx: Vec<usize> = (0..a.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let pa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
        let (m1, m2) = (mse(&a, &b).unwrap(), mse(&pa, &pb).unwrap());
        prop_assert!((m1 - m2).abs() <= 1e-12 * m1.max(1.0));
    }

    #[test]
    fn split_partitions_the_index_set(n in 10usize..400, seed in any::<u64>()) {
        let s = split_dataset(n, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let expected_train = (0.7 * n as f64 + 0.5 + 1e-9).floor() as usize;
        let expected_val = (0.1 * n as f64 + 0.5 + 1e-9).floor() as usize;
        prop_assert_eq!(s.train.len(), expected_train);
        prop_assert_eq!(s.val.len(), expected_val);
    }

    #[test]
    fn summary_is_ordered(v in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let s = summary_stats(&v).unwrap();
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.std >= 0.0);
    }
}
