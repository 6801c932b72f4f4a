use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grow::{columns_of, grow, GiniGrower};
use super::{check_training_data, BaggingParams, DecisionTree, GbdtError};

/// Majority vote over independently grown classification trees. Each leaf
/// holds the positive fraction of the training rows that reached it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedModel {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
}

impl BaggedModel {
    /// Number of trees voting positive.
    pub fn positive_votes(&self, x: &[f64]) -> Result<usize, GbdtError> {
        if x.len() != self.n_features {
            return Err(GbdtError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.trees.iter().filter(|t| t.predict(x) >= 0.5).count())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, GbdtError> {
        let pos = self.positive_votes(x)?;
        Ok(pos as f64 / self.trees.len().max(1) as f64)
    }

    /// Positive when at least half the trees say so.
    pub fn predict_label(&self, x: &[f64]) -> Result<u8, GbdtError> {
        let pos = self.positive_votes(x)?;
        Ok(u8::from(2 * pos >= self.trees.len()))
    }
}

fn gini_tree(
    cols: &[Vec<f64>],
    y: &[u8],
    rows: Vec<usize>,
    params: &BaggingParams,
) -> DecisionTree {
    let grower = GiniGrower {
        cols,
        y,
        min_samples_leaf: params.min_samples_leaf,
    };
    grow(&grower, rows, params.max_depth, params.min_samples_leaf)
}

/// One Gini tree on every row of `x`.
pub fn fit_gini_tree(
    x: &Array2<f64>,
    y: &[u8],
    params: &BaggingParams,
) -> Result<DecisionTree, GbdtError> {
    params.validate()?;
    check_training_data(x, y)?;
    Ok(gini_tree(&columns_of(x), y, (0..y.len()).collect(), params))
}

pub fn fit_bagging(
    x: &Array2<f64>,
    y: &[u8],
    params: &BaggingParams,
) -> Result<BaggedModel, GbdtError> {
    params.validate()?;
    check_training_data(x, y)?;
    let cols = columns_of(x);
    let n = y.len();
    let trees = (0..params.n_trees)
        .map(|t| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                let mut r: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                r.sort_unstable();
                r
            } else {
                (0..n).collect()
            };
            gini_tree(&cols, y, rows, params)
        })
        .collect();
    Ok(BaggedModel {
        trees,
        n_features: x.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pure_tree_memorizes_distinct_rows() {
        let x = array![[0.0, 5.0], [1.0, 4.0], [2.0, 3.0], [3.0, 2.0], [4.0, 1.0]];
        let y = [0, 1, 0, 1, 1];
        let t = fit_gini_tree(&x, &y, &BaggingParams::default()).unwrap();
        for (i, row) in x.rows().into_iter().enumerate() {
            assert_eq!(t.predict(&row.to_vec()), f64::from(y[i]));
        }
    }

    #[test]
    fn bagging_is_seed_deterministic() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let p = BaggingParams {
            n_trees: 10,
            ..BaggingParams::default()
        };
        assert_eq!(
            fit_bagging(&x, &y, &p).unwrap(),
            fit_bagging(&x, &y, &p).unwrap()
        );
    }
}
