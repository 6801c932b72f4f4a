use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bundle::{EnsembleModel, TrainingMetadata};
use super::{derive_seed, EvalError, EvalParams};
use crate::dataset::{grouped_holdout, Dataset, Record, ScalerParams};
use crate::ensemble::{compute_weights, ClassifierKind};
use crate::features::{FEATURE_NAMES, N_FEATURES};
use crate::gbdt::{fit_bagging, fit_boosted, BaggedModel, BoostMode, BoostedModel, TreeParams};

pub const GRID_MAX_DEPTH: [usize; 3] = [3, 4, 6];
pub const GRID_LEARNING_RATE: [f64; 2] = [0.05, 0.1];
pub const GRID_N_ROUNDS: [usize; 2] = [100, 200];

/// Boosting hyperparameters picked on the inner split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridChoice {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_rounds: usize,
}

impl GridChoice {
    fn of(p: &TreeParams) -> Self {
        Self {
            max_depth: p.max_depth,
            learning_rate: p.learning_rate,
            n_rounds: p.n_rounds,
        }
    }

    fn apply(&self, base: &TreeParams) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            n_rounds: self.n_rounds,
            ..base.clone()
        }
    }
}

/// SHA-256 over the (subject, replication) keys of the given rows, sorted.
pub fn index_fingerprint(records: &[Record], indices: &[usize]) -> String {
    let mut keys: Vec<(&str, u8)> = indices
        .iter()
        .map(|&i| (records[i].subject_id.as_str(), records[i].replication_idx))
        .collect();
    keys.sort_unstable();
    let mut h = Sha256::new();
    for (s, r) in keys {
        h.update(s.as_bytes());
        h.update([0, r]);
    }
    hex::encode(h.finalize())
}

fn design(records: &[Record], rows: &[usize], scaler: &ScalerParams) -> (Array2<f64>, Vec<u8>) {
    let scaled: Vec<[f64; N_FEATURES]> = rows
        .iter()
        .map(|&i| scaler.apply(records[i].features.as_array()))
        .collect();
    let x = Array2::from_shape_fn((rows.len(), N_FEATURES), |(r, c)| scaled[r][c]);
    let y = rows.iter().map(|&i| records[i].label.as_u8()).collect();
    (x, y)
}

fn accuracy(predict: impl Fn(&[f64]) -> u8, x: &Array2<f64>, y: &[u8]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let hits = x
        .rows()
        .into_iter()
        .zip(y)
        .filter(|(row, &label)| predict(&row.to_vec()) == label)
        .count();
    hits as f64 / y.len() as f64
}

fn boosted_accuracy(m: &BoostedModel, x: &Array2<f64>, y: &[u8]) -> f64 {
    accuracy(|r| m.predict_label(r).expect("width checked at fit"), x, y)
}

enum Fitted {
    Boosted(BoostedModel, GridChoice),
    Bagged(BaggedModel),
}

struct Split<'a> {
    inner_x: &'a Array2<f64>,
    inner_y: &'a [u8],
    val_x: &'a Array2<f64>,
    val_y: &'a [u8],
    full_x: &'a Array2<f64>,
    full_y: &'a [u8],
}

fn select_boosted(
    s: &Split,
    base: &TreeParams,
    mode: BoostMode,
    grid: bool,
) -> Result<(f64, GridChoice), EvalError> {
    if !grid {
        let m = fit_boosted(s.inner_x, s.inner_y, base, mode)?;
        return Ok((boosted_accuracy(&m, s.val_x, s.val_y), GridChoice::of(base)));
    }
    let longest = *GRID_N_ROUNDS.iter().max().expect("non-empty grid");
    let mut best: Option<(f64, GridChoice)> = None;
    for &max_depth in &GRID_MAX_DEPTH {
        for &learning_rate in &GRID_LEARNING_RATE {
            let p = TreeParams {
                max_depth,
                learning_rate,
                n_rounds: longest,
                ..base.clone()
            };
            // shorter schedules are exact prefixes of the longest one
            let full = fit_boosted(s.inner_x, s.inner_y, &p, mode)?;
            for &n_rounds in &GRID_N_ROUNDS {
                let acc = boosted_accuracy(&full.truncated(n_rounds), s.val_x, s.val_y);
                if best.is_none_or(|(b, _)| acc > b) {
                    best = Some((
                        acc,
                        GridChoice {
                            max_depth,
                            learning_rate,
                            n_rounds,
                        },
                    ));
                }
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}

fn fit_member(
    kind: ClassifierKind,
    s: &Split,
    params: &EvalParams,
    seed: u64,
) -> Result<(f64, Fitted), EvalError> {
    match kind.boost_mode() {
        Some(mode) => {
            let stream = 1 + ClassifierKind::ALL
                .iter()
                .position(|&k| k == kind)
                .unwrap_or(0) as u64;
            let base = TreeParams {
                seed: derive_seed(seed, stream),
                ..params.tree.clone()
            };
            let (acc, choice) = select_boosted(s, &base, mode, params.grid)?;
            let model = fit_boosted(s.full_x, s.full_y, &choice.apply(&base), mode)?;
            Ok((acc, Fitted::Boosted(model, choice)))
        }
        None => {
            let bp = crate::gbdt::BaggingParams {
                seed: derive_seed(seed, 4),
                ..params.bagging.clone()
            };
            let inner = fit_bagging(s.inner_x, s.inner_y, &bp)?;
            let acc = accuracy(|r| inner.predict_label(r).expect("width"), s.val_x, s.val_y);
            Ok((acc, Fitted::Bagged(fit_bagging(s.full_x, s.full_y, &bp)?)))
        }
    }
}

/// Fits the full ensemble on `train` rows of `ds`: scaler, inner holdout
/// for weights and grid selection, then a refit of all four members on
/// every training row. Nothing outside `train` is read.
pub(crate) fn fit_on(
    ds: &Dataset,
    train: &[usize],
    params: &EvalParams,
    seed: u64,
) -> Result<EnsembleModel, EvalError> {
    params.validate()?;
    let records = ds.records();
    let scaler = ScalerParams::fit_rows(train.iter().map(|&i| records[i].features.as_array()))?;
    let (inner, val) = grouped_holdout(records, train, params.inner_fraction, derive_seed(seed, 0));
    if val.is_empty() {
        log::warn!("inner validation split is empty; classifier weights fall back to uniform");
    }
    let (inner_x, inner_y) = design(records, &inner, &scaler);
    let (val_x, val_y) = design(records, &val, &scaler);
    let (full_x, full_y) = design(records, train, &scaler);
    let split = Split {
        inner_x: &inner_x,
        inner_y: &inner_y,
        val_x: &val_x,
        val_y: &val_y,
        full_x: &full_x,
        full_y: &full_y,
    };

    let fitted: Vec<(f64, Fitted)> = ClassifierKind::ALL
        .par_iter()
        .map(|&k| fit_member(k, &split, params, seed))
        .collect::<Result<_, _>>()?;

    let inner_accuracy: [f64; 4] = std::array::from_fn(|i| fitted[i].0);
    let weights = compute_weights(inner_accuracy)?;
    let mut boosted = Vec::new();
    let mut selected = Vec::new();
    let mut bagging = None;
    for (_, f) in fitted {
        match f {
            Fitted::Boosted(m, c) => {
                boosted.push(m);
                selected.push(c);
            }
            Fitted::Bagged(b) => bagging = Some(b),
        }
    }
    let boosted: [BoostedModel; 3] = boosted
        .try_into()
        .map_err(|_| EvalError::Io("internal: expected three boosted members".into()))?;

    let metadata = TrainingMetadata {
        seed,
        n_records: train.len(),
        n_subjects: crate::dataset::group_subjects(records, train).len(),
        dataset_fingerprint: ds.fingerprint(),
        training_rows_fingerprint: index_fingerprint(records, train),
        inner_accuracy,
        selected,
        tree_params: params.tree.clone(),
        bagging_params: params.bagging.clone(),
        grid: params.grid,
        trainer: format!("pdadsv {}", env!("CARGO_PKG_VERSION")),
    };
    Ok(EnsembleModel {
        scaler,
        boosted,
        bagging: bagging.expect("bagging member is always fitted"),
        weights,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        metadata,
    })
}

/// Trains the deployable ensemble on every record of `ds`.
pub fn train_final(
    ds: &Dataset,
    params: &EvalParams,
    seed: u64,
) -> Result<EnsembleModel, EvalError> {
    let all: Vec<usize> = (0..ds.len()).collect();
    fit_on(ds, &all, params, seed)
}
