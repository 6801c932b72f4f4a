use ndarray::Array2;
use pdadsv_core::gbdt::{
    best_split_histogram, best_split_over_features, bin_features, efb_bundle, fit_bagging,
    fit_boosted, fit_gini_tree, goss_sample, logistic_grad_hess, BaggedModel, BaggingParams,
    BoostMode, DecisionTree, TreeParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute force over every feature and every gap between distinct values,
/// with sums recomputed from scratch for each candidate.
fn brute_force_split(
    x: &Array2<f64>,
    g: &[f64],
    h: &[f64],
    lambda: f64,
    gamma: f64,
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let score = |gs: f64, hs: f64| {
        if hs + lambda > 0.0 {
            gs * gs / (hs + lambda)
        } else {
            0.0
        }
    };
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let mid = w[0] + (w[1] - w[0]) / 2.0;
            let t = if mid > w[0] { mid } else { w[1] };
            let (mut gl, mut hl, mut gr, mut hr, mut nl, mut nr) = (0.0, 0.0, 0.0, 0.0, 0, 0);
            for i in 0..x.nrows() {
                if x[[i, f]] < t {
                    gl += g[i];
                    hl += h[i];
                    nl += 1;
                } else {
                    gr += g[i];
                    hr += h[i];
                    nr += 1;
                }
            }
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma;
            if gain > 0.0 && best.is_none_or(|(_, _, b)| gain - b > 1e-12 * b.abs()) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

fn random_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    levels: u32,
) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let x = Array2::from_shape_fn((n, d), |_| {
        f64::from(rng.random_range(0..levels)) * 0.37 - 1.0
    });
    let g = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = (0..n).map(|_| rng.random_range(0.01..0.25)).collect();
    (x, g, h)
}

#[test]
fn exact_split_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..200 {
        let n = rng.random_range(2..=20);
        let (x, g, h) = random_problem(&mut rng, n, 5, 12);
        let params = TreeParams {
            lambda: rng.random_range(0.0..2.0),
            gamma: if trial % 3 == 0 {
                rng.random_range(0.0..0.05)
            } else {
                0.0
            },
            min_samples_leaf: rng.random_range(1..=3),
            ..TreeParams::default()
        };
        let got = best_split_over_features(&x, &g, &h, &params);
        let want = brute_force_split(
            &x,
            &g,
            &h,
            params.lambda,
            params.gamma,
            params.min_samples_leaf,
        );
        match (got, want) {
            (None, None) => {}
            (Some(s), Some((f, t, gain))) => {
                assert_eq!(s.feature, f, "trial {trial}");
                assert_eq!(s.threshold, t, "trial {trial}");
                assert!(
                    (s.gain - gain).abs() <= 1e-9,
                    "trial {trial}: {} vs {gain}",
                    s.gain
                );
            }
            other => panic!("trial {trial}: {other:?}"),
        }
    }
}

#[test]
fn histogram_split_matches_exact_when_bins_are_bijective() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..100 {
        let n = rng.random_range(4..=60);
        let (mut x, g, h) = random_problem(&mut rng, n, 5, 20);
        // sparsify half the trials so bundling takes part
        if trial % 2 == 0 {
            x.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
        }
        let params = TreeParams {
            min_samples_leaf: 1,
            efb_enabled: trial % 4 != 1,
            ..TreeParams::default()
        };
        let exact = best_split_over_features(&x, &g, &h, &params);
        let hist = best_split_histogram(&x, &g, &h, &params);
        match (exact, hist) {
            (None, None) => {}
            (Some(e), Some(hs)) => {
                assert_eq!(e.feature, hs.feature, "trial {trial}");
                assert_eq!(e.threshold, hs.threshold, "trial {trial}");
                assert!((e.gain - hs.gain).abs() <= 1e-9, "trial {trial}");
            }
            other => panic!("trial {trial}: {other:?}"),
        }
    }
}

fn labelled(rng: &mut ChaCha8Rng, n: usize, d: usize, sparse: bool) -> (Array2<f64>, Vec<u8>) {
    let x = Array2::from_shape_fn((n, d), |_| {
        if sparse && rng.random_bool(0.8) {
            0.0
        } else {
            rng.random_range(-2.0..2.0)
        }
    });
    let mut y: Vec<u8> = x
        .rows()
        .into_iter()
        .map(|r| u8::from(r.sum() + rng.random_range(-0.5..0.5) > 0.0))
        .collect();
    y[0] = 0;
    y[1] = 1;
    (x, y)
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.to_bits() == q.to_bits())
}

fn margins(m: &pdadsv_core::gbdt::BoostedModel, x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|r| m.predict_margin(&r.to_vec()).unwrap())
        .collect()
}

#[test]
fn goss_with_everything_kept_is_bit_identical_to_no_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let (x, y) = labelled(&mut rng, 80, 6, false);
        let base = TreeParams {
            n_rounds: 25,
            ..TreeParams::default()
        };
        let degenerate = TreeParams {
            goss_a: 1.0,
            goss_b: 0.0,
            ..base.clone()
        };
        let off = TreeParams {
            goss_enabled: false,
            ..base
        };
        let a = fit_boosted(&x, &y, &degenerate, BoostMode::HistogramGossEfb).unwrap();
        let b = fit_boosted(&x, &y, &off, BoostMode::HistogramGossEfb).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(same_bits(&margins(&a, &x), &margins(&b, &x)));
    }
}

#[test]
fn goss_weighted_gradient_sum_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let g: Vec<f64> = (0..100).map(|_| rng.random_range(0.1..1.0)).collect();
    let full: f64 = g.iter().sum();
    let runs = 10_000;
    let mut acc = 0.0;
    for seed in 0..runs {
        let s = goss_sample(&g, 0.2, 0.1, seed).unwrap();
        acc += s
            .indices
            .iter()
            .zip(&s.multipliers)
            .map(|(&i, &m)| g[i] * m)
            .sum::<f64>();
    }
    let mean = acc / runs as f64;
    assert!(((mean - full) / full).abs() < 0.01, "{mean} vs {full}");
}

#[test]
fn goss_keeps_largest_gradients() {
    let g = [0.1, -5.0, 0.2, 0.3, 4.0, 0.0, 0.1, 0.2, -0.3, 0.05];
    for seed in 0..50 {
        let s = goss_sample(&g, 0.2, 0.3, seed).unwrap();
        assert!(s.indices.contains(&1) && s.indices.contains(&4));
        assert_eq!(s.indices.len(), 5);
    }
}

#[test]
fn zero_conflict_bundling_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for trial in 0..100 {
        let n = rng.random_range(20..80);
        let d = rng.random_range(2..10);
        let (x, y) = labelled(&mut rng, n, d, true);
        let x = x.mapv(f64::abs);
        let binned = bin_features(&x, 255);
        let bundling = efb_bundle(&binned, 0.0);
        assert_eq!(bundling.decode(), binned.columns, "trial {trial}");

        let on = TreeParams {
            n_rounds: 8,
            max_depth: 3,
            min_samples_leaf: 1,
            seed: trial,
            ..TreeParams::default()
        };
        let off = TreeParams {
            efb_enabled: false,
            ..on.clone()
        };
        let a = fit_boosted(&x, &y, &on, BoostMode::HistogramGossEfb).unwrap();
        let b = fit_boosted(&x, &y, &off, BoostMode::HistogramGossEfb).unwrap();
        assert!(
            same_bits(&margins(&a, &x), &margins(&b, &x)),
            "trial {trial}"
        );
        let probe = Array2::from_shape_fn((20, d), |_| rng.random_range(0.0..2.0));
        assert!(
            same_bits(&margins(&a, &probe), &margins(&b, &probe)),
            "trial {trial}"
        );
    }
}

#[test]
fn exclusive_columns_share_one_bundle() {
    let x = Array2::from_shape_fn(
        (12, 4),
        |(i, j)| if i % 4 == j { 1.0 + j as f64 } else { 0.0 },
    );
    let binned = bin_features(&x, 255);
    let b = efb_bundle(&binned, 0.0);
    assert_eq!(b.bundles.len(), 1);
    assert_eq!(b.decode(), binned.columns);

    let dense = Array2::from_shape_fn((12, 3), |(i, j)| 1.0 + (i * 3 + j) as f64);
    assert_eq!(efb_bundle(&bin_features(&dense, 255), 0.0).bundles.len(), 3);
}

fn toy_set() -> (Array2<f64>, Vec<u8>) {
    let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64 - 9.5);
    let y = (0..20).map(|i| u8::from(x[[i, 0]] >= 0.0)).collect();
    (x, y)
}

fn independent_log_loss(y: &[u8], m: &pdadsv_core::gbdt::BoostedModel, x: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let z = m.predict_margin(&row.to_vec()).unwrap();
        // log(1 + e^{-z}) for positives, log(1 + e^{z}) for negatives
        let s = if y[i] == 1 { -z } else { z };
        total += s.max(0.0) + (-s.abs()).exp().ln_1p();
    }
    total / y.len() as f64
}

#[test]
fn training_loss_strictly_decreases_in_every_mode() {
    let (x, y) = toy_set();
    for mode in BoostMode::ALL {
        let p = TreeParams {
            learning_rate: 0.1,
            gamma: 0.0,
            n_rounds: 10,
            ..TreeParams::default()
        };
        let model = fit_boosted(&x, &y, &p, mode).unwrap();
        let losses: Vec<f64> = (0..=10)
            .map(|r| independent_log_loss(&y, &model.truncated(r), &x))
            .collect();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "{mode:?}: {losses:?}");
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (x, y) = labelled(&mut rng, 60, 5, false);
    let p = TreeParams {
        n_rounds: 20,
        colsample: 0.6,
        ..TreeParams::default()
    };
    for mode in BoostMode::ALL {
        let a = fit_boosted(&x, &y, &p, mode).unwrap();
        let b = fit_boosted(&x, &y, &p, mode).unwrap();
        assert!(same_bits(&margins(&a, &x), &margins(&b, &x)), "{mode:?}");
        assert_eq!(a, b);
    }
    let bp = BaggingParams {
        n_trees: 15,
        ..BaggingParams::default()
    };
    assert_eq!(
        fit_bagging(&x, &y, &bp).unwrap(),
        fit_bagging(&x, &y, &bp).unwrap()
    );
}

#[test]
fn bagging_majority_matches_vote_count_enumeration() {
    for trees in [5usize, 4] {
        for pattern in 0u32..(1 << trees) {
            let model = BaggedModel {
                trees: (0..trees)
                    .map(|t| DecisionTree::leaf(f64::from((pattern >> t) & 1)))
                    .collect(),
                n_features: 2,
            };
            let pos = pattern.count_ones() as usize;
            let neg = trees - pos;
            let want = u8::from(pos >= neg);
            assert_eq!(
                model.predict_label(&[0.0, 0.0]).unwrap(),
                want,
                "{trees} trees, {pattern:b}"
            );
        }
    }
}

#[test]
fn single_unbootstrapped_tree_equals_plain_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (x, y) = labelled(&mut rng, 50, 4, false);
    let p = BaggingParams {
        n_trees: 1,
        bootstrap: false,
        ..BaggingParams::default()
    };
    let bag = fit_bagging(&x, &y, &p).unwrap();
    let tree = fit_gini_tree(&x, &y, &p).unwrap();
    for row in x.rows() {
        let v = row.to_vec();
        assert_eq!(
            bag.predict_label(&v).unwrap(),
            u8::from(tree.predict(&v) >= 0.5)
        );
    }
}

#[test]
fn bagging_rejects_single_class() {
    let x = Array2::zeros((4, 2));
    assert!(fit_bagging(&x, &[0, 0, 0, 0], &BaggingParams::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gradient_and_hessian_match_finite_differences(margin in -8.0f64..8.0, y in 0u8..=1) {
        // softplus form of the logistic loss, stable for large |z|
        let loss = |z: f64| {
            let s = if y == 1 { -z } else { z };
            s.max(0.0) + (-s.abs()).exp().ln_1p()
        };
        let eps = 1e-5;
        let num_g = (loss(margin + eps) - loss(margin - eps)) / (2.0 * eps);
        let num_h = (loss(margin + eps) - 2.0 * loss(margin) + loss(margin - eps)) / (eps * eps);
        let (g, h) = logistic_grad_hess(y, margin);
        prop_assert!((g - num_g).abs() < 1e-6);
        prop_assert!((h - num_h).abs() < 1e-4);
    }

    #[test]
    fn binning_preserves_order(values in prop::collection::vec(-1e3f64..1e3, 1..300), max_bins in 2usize..40) {
        let n = values.len();
        let x = Array2::from_shape_vec((n, 1), values.clone()).unwrap();
        let b = bin_features(&x, max_bins);
        let col = &b.columns[0];
        for i in 0..n {
            for j in 0..n {
                if values[i] <= values[j] {
                    prop_assert!(col[i] <= col[j]);
                }
            }
        }
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() <= max_bins {
            prop_assert_eq!(b.bins[0].n_bins(), distinct.len());
        } else {
            prop_assert!(b.bins[0].n_bins() <= max_bins);
        }
    }

    #[test]
    fn second_order_loss_never_increases(seed in 0u64..200, eta in 0.01f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = labelled(&mut rng, 30, 3, false);
        let p = TreeParams { learning_rate: eta, gamma: 0.0, n_rounds: 8, ..TreeParams::default() };
        let m = fit_boosted(&x, &y, &p, BoostMode::SecondOrder).unwrap();
        let losses: Vec<f64> = (0..=8).map(|r| independent_log_loss(&y, &m.truncated(r), &x)).collect();
        for w in losses.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", losses);
        }
    }
}
