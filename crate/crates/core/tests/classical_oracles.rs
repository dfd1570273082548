//! Classical regressors against brute-force and closed-form references.

use hsreg_core::classical::svr::{dual_objective, rbf_kernel_matrix};
use hsreg_core::classical::{
    adaboost_r2_fit, knnr_fit, plsr_fit, plsr_select_components, svr_fit, tree_fit, AdaBoostParams, SvrParams,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_xy(rng: &mut ChaCha8Rng, n: usize, b: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..b).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v).sum::<f64>().sin() + rng.random_range(-0.1..0.1))
        .collect();
    (x, y)
}

// ---- KNN ----

#[test]
fn knn_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let n = rng.random_range(5..40);
        let (x, y) = random_xy(&mut rng, n, 4);
        let k = rng.random_range(1..=n.min(10));
        let m = knnr_fit(&x, &y, k).unwrap();
        let q: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut all: Vec<(f64, usize)> = x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s = 0.0;
        for &(_, i) in &all[..k] {
            s += y[i];
        }
        assert_eq!(m.predict(&q).unwrap(), s / k as f64);
        let ids: Vec<usize> = all[..k].iter().map(|p| p.1).collect();
        assert_eq!(m.neighbors(&q).unwrap(), ids);
    }
}

// ---- PLSR ----

fn ols(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let (n, b) = (x.len(), x[0].len());
    let a = DMatrix::from_fn(n, b + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let svd = a.svd(true, true);
    svd.solve(&DVector::from_column_slice(y), 1e-14).unwrap().iter().copied().collect()
}

#[test]
fn full_rank_plsr_equals_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..10 {
        let (x, y) = random_xy(&mut rng, 30, 6);
        let m = plsr_fit(&x, &y, 6).unwrap();
        let (intercept, coef) = m.coefficients();
        let beta = ols(&x, &y);
        assert!((intercept - beta[0]).abs() < 1e-6, "{intercept} vs {}", beta[0]);
        for (c, o) in coef.iter().zip(&beta[1..]) {
            assert!((c - o).abs() < 1e-6, "{c} vs {o}");
        }
    }
}

#[test]
fn pls_scores_are_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (x, y) = random_xy(&mut rng, 60, 20);
    let m = plsr_fit(&x, &y, 10).unwrap();
    let t = m.scores();
    assert_eq!(t.len(), 10);
    for a in 0..10 {
        for b in 0..a {
            let d: f64 = t[a].iter().zip(&t[b]).map(|(u, v)| u * v).sum();
            assert!(d.abs() < 1e-8, "t{a}·t{b} = {d}");
        }
    }
}

#[test]
fn first_weight_is_normalized_covariance_for_orthonormal_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let (n, b) = (25, 4);
    let mut raw = DMatrix::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0));
    for j in 0..b {
        let mean = raw.column(j).mean();
        raw.column_mut(j).add_scalar_mut(-mean);
    }
    // Centered orthonormal columns share one standard deviation.
    let q = raw.qr().q();
    let x: Vec<Vec<f64>> = (0..n).map(|i| (0..b).map(|j| q[(i, j)]).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut c: Vec<f64> = (0..b).map(|j| (0..n).map(|i| q[(i, j)] * (y[i] - ybar)).sum()).collect();
    let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    c.iter_mut().for_each(|v| *v /= cn);
    let m = plsr_fit(&x, &y, 1).unwrap();
    for (w, e) in m.weights()[0].iter().zip(&c) {
        assert!((w - e).abs() < 1e-10);
    }
}

fn rank_two(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p1: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p2: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let (s1, s2): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        x.push(p1.iter().zip(&p2).map(|(a, b)| s1 * a + s2 * b).collect());
        y.push(3.0 * s1 - 2.0 * s2);
    }
    (x, y)
}

#[test]
fn two_latent_data_selects_two_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let (xt, yt) = rank_two(&mut rng, 40);
    let (xv, yv) = rank_two(&mut ChaCha8Rng::seed_from_u64(35), 40);
    let s = plsr_select_components(&xt, &yt, &xv[..20], &yv[..20], &(1..=8).collect::<Vec<_>>()).unwrap();
    assert_eq!(s.selected, 2, "{:?}", s.candidates);
}

#[test]
fn tied_validation_error_picks_fewest_components() {
    let dir = [1.0, -2.0, 0.5, 3.0, 0.1];
    let s = [0.3, -1.2, 2.0, 0.7, -0.4, 1.1, 0.05, -0.8];
    let x: Vec<Vec<f64>> = s.iter().map(|v| dir.iter().map(|d| d * v).collect()).collect();
    let y: Vec<f64> = s.iter().map(|v| 4.0 * v + 1.0).collect();
    let r = plsr_select_components(&x, &y, &x, &y, &[4, 2, 3, 1]).unwrap();
    assert_eq!(r.selected, 1);
    assert!(r.candidates.windows(2).all(|w| w[0].1 == w[1].1));
}

// ---- Trees and AdaBoost.R2 ----

/// Exhaustive weighted stump: (feature, threshold, left mean, right mean).
fn stump_oracle(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> (usize, f64, f64, f64) {
    let mut best: Option<(f64, usize, f64, f64, f64)> = None;
    for j in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[j]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for pair in vals.windows(2) {
            let t = 0.5 * (pair[0] + pair[1]);
            let side = |left: bool| {
                let idx: Vec<usize> = (0..y.len()).filter(|&i| (x[i][j] <= t) == left).collect();
                let sw: f64 = idx.iter().map(|&i| w[i]).sum();
                let mean = idx.iter().map(|&i| w[i] * y[i]).sum::<f64>() / sw;
                let sse: f64 = idx.iter().map(|&i| w[i] * (y[i] - mean).powi(2)).sum();
                (mean, sse)
            };
            let (ml, sl) = side(true);
            let (mr, sr) = side(false);
            if best.is_none_or(|b| sl + sr < b.0 - 1e-12) {
                best = Some((sl + sr, j, t, ml, mr));
            }
        }
    }
    let b = best.unwrap();
    (b.1, b.2, b.3, b.4)
}

fn distinct_data(rng: &mut ChaCha8Rng, n: usize, b: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..b).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
    let y: Vec<f64> = x.iter().map(|r| r[0].sin() * 3.0 + 0.5 * r[1] + rng.random_range(-1.0..1.0)).collect();
    (x, y)
}

#[test]
fn root_split_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..20 {
        let (x, y) = distinct_data(&mut rng, 20, 3);
        let w: Vec<f64> = (0..20).map(|_| rng.random_range(0.1..1.0)).collect();
        let t = tree_fit(&x, &y, &w, 1).unwrap();
        let (f, th, ml, mr) = stump_oracle(&x, &y, &w);
        assert_eq!(t.root_split(), Some((f, th)));
        for r in &x {
            let e = if r[f] <= th { ml } else { mr };
            assert!((t.predict(r).unwrap() - e).abs() < 1e-12);
        }
    }
}

#[test]
fn duplicating_a_row_equals_doubling_its_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let (x, y) = distinct_data(&mut rng, 20, 3);
    let mut w = vec![1.0; 20];
    w[4] = 2.0;
    let doubled = tree_fit(&x, &y, &w, 3).unwrap();
    let mut xd = x.clone();
    let mut yd = y.clone();
    xd.push(x[4].clone());
    yd.push(y[4]);
    let dup = tree_fit(&xd, &yd, &[1.0; 21], 3).unwrap();
    for r in &x {
        assert!((doubled.predict(r).unwrap() - dup.predict(r).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn adaboost_three_round_trajectory_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    let x: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
    let y: Vec<f64> = x.iter().map(|r| {
            // Bell-shaped noise keeps the mean normalized loss below one half.
            let noise: f64 = (0..4).map(|_| rng.random_range(-0.5..0.5)).sum();
            let step = if r[0] > 5.0 { 3.0 } else { 0.0 };
            step + 0.3 * noise
        })
        .collect();
    let params = AdaBoostParams {
        n_estimators: 3,
        learning_rate: 0.7,
        max_depth: 1,
    };
    let (model, rounds) = adaboost_r2_fit(&x, &y, &params).unwrap();
    assert_eq!(rounds.len(), 3, "{rounds:?}");

    let n = x.len();
    let mut w = vec![1.0 / n as f64; n];
    for round in &rounds {
        for (a, b) in round.sample_weights.iter().zip(&w) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((round.sample_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (f, th, ml, mr) = stump_oracle(&x, &y, &w);
        let err: Vec<f64> = (0..n).map(|i| ((if x[i][f] <= th { ml } else { mr }) - y[i]).abs()).collect();
        let dmax = err.iter().cloned().fold(0.0, f64::max);
        let loss: Vec<f64> = err.iter().map(|e| e / dmax).collect();
        let lbar: f64 = loss.iter().zip(&w).map(|(l, wi)| l * wi).sum();
        assert!((round.avg_loss - lbar).abs() < 1e-10);
        let beta = lbar / (1.0 - lbar);
        assert!((round.beta.unwrap() - beta).abs() < 1e-10);
        assert!((round.estimator_weight.unwrap() - 0.7 * (1.0 / beta).ln()).abs() < 1e-10);
        for i in 0..n {
            w[i] *= beta.powf(0.7 * (1.0 - loss[i]));
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
    }
    assert_eq!(model.estimators().len(), 3);
}

// ---- SVR ----

/// Maximizes the dual over `β1, β2` (with `β3 = −β1 − β2`, `|βi| ≤ C`) on a
/// coarse grid followed by a fine grid around the coarse optimum.
fn grid_dual_max(kernel: &[f64], y: &[f64], c: f64, eps: f64) -> f64 {
    let eval = |b1: f64, b2: f64| {
        let b3 = -b1 - b2;
        if b3.abs() > c + 1e-15 {
            return f64::NEG_INFINITY;
        }
        dual_objective(kernel, y, &[b1, b2, b3], eps)
    };
    let steps = 400;
    let h = 2.0 * c / steps as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        for j in 0..=steps {
            let (b1, b2) = (-c + i as f64 * h, -c + j as f64 * h);
            let v = eval(b1, b2);
            if v > best.0 {
                best = (v, b1, b2);
            }
        }
    }
    let (_, c1, c2) = best;
    let fine = h / 50.0;
    for i in -100..=100 {
        for j in -100..=100 {
            let (b1, b2) = ((c1 + i as f64 * fine).clamp(-c, c), (c2 + j as f64 * fine).clamp(-c, c));
            let v = eval(b1, b2);
            if v > best.0 {
                best = (v, b1, b2);
            }
        }
    }
    best.0
}

#[test]
fn svr_dual_matches_grid_search_on_three_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    for _ in 0..25 {
        let x: Vec<Vec<f64>> = (0..3).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let params = SvrParams {
            c: rng.random_range(0.2..3.0),
            epsilon: rng.random_range(0.0..0.3),
            gamma: Some(rng.random_range(0.1..2.0)),
            ..SvrParams::default()
        };
        let m = svr_fit(&x, &y, &params).unwrap();
        let fitted: Vec<f64> = x.iter().map(|r| m.predict(r).unwrap() - m.bias).collect();
        // Recover β from K β = f; K is positive definite for distinct points.
        let k = rbf_kernel_matrix(&x, m.gamma);
        let kd = DMatrix::from_row_slice(3, 3, &k);
        let sol = kd.lu().solve(&DVector::from_column_slice(&fitted)).unwrap();
        let beta: Vec<f64> = sol.iter().copied().collect();
        let nonzero = beta.iter().filter(|b| b.abs() > 1e-9).count();
        assert_eq!(nonzero, m.n_support());
        let got = dual_objective(&k, &y, &beta, params.epsilon);
        let reference = grid_dual_max(&k, &y, params.c, params.epsilon);
        assert!((got - reference).abs() <= 1e-3, "solver {got} grid {reference}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn svr_is_permutation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = random_xy(&mut rng, 25, 3);
        let mut perm: Vec<usize> = (0..25).collect();
        for i in (1..25).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let xp: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let p = SvrParams { gamma: Some(0.5), ..SvrParams::default() };
        let a = svr_fit(&x, &y, &p).unwrap();
        let b = svr_fit(&xp, &yp, &p).unwrap();
        for _ in 0..10 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            prop_assert!((a.predict(&q).unwrap() - b.predict(&q).unwrap()).abs() <= 1e-6);
        }
    }

    #[test]
    fn adaboost_weights_stay_normalized(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = distinct_data(&mut rng, 30, 3);
        let (_, rounds) = adaboost_r2_fit(&x, &y, &AdaBoostParams::default()).unwrap();
        for r in rounds {
            prop_assert!((r.sample_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
