use pdadsv_core::dataset::{grouped_folds, synthetic_dataset, Dataset};
use pdadsv_core::eval::{
    cross_validate, index_fingerprint, load_model, metrics, save_model, train_final,
    ConfusionMatrix, EnsembleModel, EvalError, EvalParams, FoldPlan,
};
use pdadsv_core::gbdt::{BaggingParams, TreeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick_params() -> EvalParams {
    EvalParams {
        tree: TreeParams {
            n_rounds: 30,
            ..TreeParams::default()
        },
        bagging: BaggingParams {
            n_trees: 15,
            ..BaggingParams::default()
        },
        grid: false,
        ..EvalParams::default()
    }
}

#[test]
fn metrics_match_per_record_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..500 {
        let n = rng.random_range(1..60);
        let truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let pred: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let m = metrics(&ConfusionMatrix::from_labels(&truth, &pred)).unwrap();

        let mut correct = 0.0;
        let (mut pos, mut neg, mut pred_pos, mut tp, mut tn) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let (t, p) = (truth[i] == 1, pred[i] == 1);
            if t == p {
                correct += 1.0;
            }
            if t {
                pos += 1.0;
            } else {
                neg += 1.0;
            }
            if p {
                pred_pos += 1.0;
            }
            if t && p {
                tp += 1.0;
            }
            if !t && !p {
                tn += 1.0;
            }
        }
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let (fp, fn_) = (pred_pos - tp, pos - tp);
        let sens = div(tp, pos);
        let prec = div(tp, pred_pos);
        let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        let want = [
            correct / n as f64,
            sens,
            div(tn, neg),
            prec,
            div(2.0 * prec * sens, prec + sens),
            div(tp * tn - fp * fn_, den),
        ];
        let got = [
            m.accuracy,
            m.sensitivity,
            m.specificity,
            m.precision,
            m.f1,
            m.mcc,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }
}

fn trained() -> (Dataset, EnsembleModel) {
    let ds = synthetic_dataset(12, 10, 0.8, 5);
    let model = train_final(&ds, &quick_params(), 42).unwrap();
    (ds, model)
}

fn random_vectors(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..32).map(|_| rng.random_range(-2.5..3.5)).collect())
        .collect()
}

#[test]
fn bundle_roundtrip_preserves_predictions_bit_for_bit() {
    let (_, model) = trained();
    let mut buf = Vec::new();
    save_model(&model, &mut buf).unwrap();
    let loaded = load_model(buf.as_slice()).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(loaded.model_version(), model.model_version());
    for v in random_vectors(100, 8) {
        let (a, b) = (model.predict(&v).unwrap(), loaded.predict(&v).unwrap());
        assert_eq!(a.votes, b.votes);
        assert_eq!(a.final_label, b.final_label);
        assert_eq!(a.tally_pos.to_bits(), b.tally_pos.to_bits());
        let (pa, pb) = (a.probabilities.unwrap(), b.probabilities.unwrap());
        assert!(pa.iter().zip(pb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn bundle_weights_sum_to_one_and_labels_are_binary() {
    let (ds, model) = trained();
    let s: f64 = model.weights.as_array().iter().sum();
    assert!((s - 1.0).abs() <= 1e-12);
    for r in ds.records() {
        let p = model.predict(r.features.as_array()).unwrap();
        assert!(p.final_label <= 1);
        assert_eq!(p, model.predict(r.features.as_array()).unwrap());
    }
    assert_eq!(model.metadata.dataset_fingerprint, ds.fingerprint());
}

#[test]
fn bundle_errors_name_their_cause() {
    let (_, model) = trained();
    let text = model.to_json_string();

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["format_version"] = 99.into();
    assert!(matches!(
        EnsembleModel::from_json_str(&doc.to_string()),
        Err(EvalError::UnsupportedVersion { found, .. }) if found == "99"
    ));

    for field in ["scaler", "models", "weights", "feature_names", "metadata"] {
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc.as_object_mut().unwrap().remove(field);
        match EnsembleModel::from_json_str(&doc.to_string()) {
            Err(EvalError::SchemaViolation { field: f, .. }) => assert_eq!(f, field),
            other => panic!("{field}: {other:?}"),
        }
    }

    // cut inside each top-level value in turn
    for field in ["scaler", "models", "weights", "feature_names", "metadata"] {
        let start = text.find(&format!("\"{field}\":")).unwrap();
        let cut = &text[..start + field.len() + 5];
        match EnsembleModel::from_json_str(cut) {
            Err(EvalError::SchemaViolation { field: f, .. }) => assert_eq!(f, field),
            other => panic!("{field}: {other:?}"),
        }
    }

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["weights"] = serde_json::json!([0.5, 0.5, 0.5, 0.5]);
    assert!(matches!(
        EnsembleModel::from_json_str(&doc.to_string()),
        Err(EvalError::SchemaViolation { field, .. }) if field == "weights"
    ));
}

#[test]
fn wrong_length_and_non_finite_inputs_are_rejected() {
    let (_, model) = trained();
    assert_eq!(
        model.predict(&[0.0; 31]),
        Err(EvalError::FeatureCount {
            expected: 32,
            got: 31
        })
    );
    let mut v = vec![0.0; 32];
    v[7] = f64::NAN;
    assert_eq!(
        model.predict(&v),
        Err(EvalError::NonFiniteFeature { index: 7 })
    );
}

#[test]
fn separable_data_scores_perfectly_in_every_fold() {
    let ds = synthetic_dataset(15, 15, 6.0, 9);
    let report = cross_validate(&ds, FoldPlan::KFold(5), 3, &quick_params()).unwrap();
    assert_eq!(report.folds.len(), 5);
    for f in &report.folds {
        assert_eq!(f.metrics.accuracy, 1.0, "fold {}", f.fold);
    }
}

#[test]
fn cross_validation_is_deterministic_and_leak_free() {
    let ds = synthetic_dataset(14, 12, 0.6, 10);
    let params = EvalParams {
        grid: true,
        ..quick_params()
    };
    let a = cross_validate(&ds, FoldPlan::KFold(4), 77, &params).unwrap();
    let b = cross_validate(&ds, FoldPlan::KFold(4), 77, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json_pretty(), b.to_json_pretty());
    assert_eq!(a.to_text_table(), b.to_text_table());

    let records = ds.records();
    let folds = grouped_folds(&ds, 4, 77).unwrap();
    for (f, test) in a.folds.iter().zip(&folds) {
        let train: Vec<usize> = (0..ds.len()).filter(|i| !test.contains(i)).collect();
        assert_eq!(f.train_fingerprint, index_fingerprint(records, &train));
        assert_eq!(f.test_fingerprint, index_fingerprint(records, test));
        for &i in &train {
            assert!(!f.test_subjects.contains(&records[i].subject_id));
        }
        assert_eq!(f.n_train + f.n_test, ds.len());
    }
    let mean = a.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / a.folds.len() as f64;
    assert!((a.aggregate.accuracy.mean - mean).abs() <= 1e-12);
}

#[test]
fn leave_one_subject_out_has_a_fold_per_subject() {
    let ds = synthetic_dataset(5, 5, 2.0, 12);
    let report = cross_validate(&ds, FoldPlan::LeaveOneSubjectOut, 1, &quick_params()).unwrap();
    assert_eq!(report.folds.len(), 10);
    assert!(report
        .folds
        .iter()
        .all(|f| f.test_subjects.len() == 1 && f.n_test == 3));
}
