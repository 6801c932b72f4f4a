use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::efb::{efb_bundle, FeatureBundling};
use super::goss::goss_sample_with;
use super::grow::{columns_of, grow, ExactGrower, GradStats, HistGrower};
use super::{
    bin_features, check_training_data, logistic_grad_hess, sigmoid, BinnedFeatures, BoostMode,
    DecisionTree, GbdtError, TreeParams,
};

// GOSS draws from its own stream so that toggling column sampling never
// perturbs the row sample.
const GOSS_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// An additive ensemble of regression trees on the logit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub mode: BoostMode,
    pub base_margin: f64,
    pub learning_rate: f64,
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
}

impl BoostedModel {
    pub fn predict_margin(&self, x: &[f64]) -> Result<f64, GbdtError> {
        if x.len() != self.n_features {
            return Err(GbdtError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut m = self.base_margin;
        for t in &self.trees {
            m += self.learning_rate * t.predict(x);
        }
        Ok(m)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, GbdtError> {
        self.predict_margin(x).map(sigmoid)
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<u8, GbdtError> {
        self.predict_proba(x).map(|p| u8::from(p >= 0.5))
    }

    /// The same model restricted to its first `n` trees.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            trees: self.trees.iter().take(n).cloned().collect(),
            ..self.clone()
        }
    }
}

/// Precomputed per-fit state shared by every round.
struct Builder {
    cols: Vec<Vec<f64>>,
    hist: Option<(BinnedFeatures, FeatureBundling)>,
    col_rng: ChaCha8Rng,
    goss_rng: ChaCha8Rng,
}

impl Builder {
    fn new(x: &Array2<f64>, params: &TreeParams, mode: BoostMode) -> Self {
        let hist = (mode == BoostMode::HistogramGossEfb).then(|| {
            let binned = bin_features(x, params.max_bins);
            let bundling = if params.efb_enabled {
                efb_bundle(&binned, params.efb_max_conflict)
            } else {
                FeatureBundling::identity(&binned)
            };
            (binned, bundling)
        });
        Self {
            cols: columns_of(x),
            hist,
            col_rng: ChaCha8Rng::seed_from_u64(params.seed),
            goss_rng: ChaCha8Rng::seed_from_u64(params.seed ^ GOSS_STREAM),
        }
    }

    fn n_rows(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    fn feature_subset(&mut self, params: &TreeParams) -> Vec<usize> {
        let d = self.cols.len();
        let k = ((params.colsample * d as f64) - 1e-9)
            .ceil()
            .clamp(1.0, d as f64) as usize;
        if k >= d {
            return (0..d).collect();
        }
        let mut f = sample(&mut self.col_rng, d, k).into_vec();
        f.sort_unstable();
        f
    }

    fn tree(
        &mut self,
        g: &[f64],
        h: &[f64],
        params: &TreeParams,
        mode: BoostMode,
    ) -> Result<DecisionTree, GbdtError> {
        let n = self.n_rows();
        let all: Vec<usize> = (0..n).collect();
        match mode {
            BoostMode::ClassicGb => {
                let ones = vec![1.0; n];
                let grower = ExactGrower {
                    cols: &self.cols,
                    features: (0..self.cols.len()).collect(),
                    stats: GradStats {
                        g,
                        h_split: &ones,
                        h_leaf: h,
                        lambda_split: 0.0,
                        lambda_leaf: 0.0,
                        gamma: 0.0,
                    },
                    min_samples_leaf: params.min_samples_leaf,
                };
                let root = grower.root(all);
                Ok(grow(
                    &grower,
                    root,
                    params.max_depth,
                    params.min_samples_leaf,
                ))
            }
            BoostMode::SecondOrder => {
                let features = self.feature_subset(params);
                let grower = ExactGrower {
                    cols: &self.cols,
                    features,
                    stats: GradStats {
                        g,
                        h_split: h,
                        h_leaf: h,
                        lambda_split: params.lambda,
                        lambda_leaf: params.lambda,
                        gamma: params.gamma,
                    },
                    min_samples_leaf: params.min_samples_leaf,
                };
                let root = grower.root(all);
                Ok(grow(
                    &grower,
                    root,
                    params.max_depth,
                    params.min_samples_leaf,
                ))
            }
            BoostMode::HistogramGossEfb => {
                let (rows, gw, hw) = if params.goss_enabled {
                    let s = goss_sample_with(g, params.goss_a, params.goss_b, &mut self.goss_rng)?;
                    let (mut gw, mut hw) = (vec![0.0; n], vec![0.0; n]);
                    for (&i, &m) in s.indices.iter().zip(&s.multipliers) {
                        gw[i] = g[i] * m;
                        hw[i] = h[i] * m;
                    }
                    (s.indices, gw, hw)
                } else {
                    (all, g.to_vec(), h.to_vec())
                };
                let (binned, bundling) = self.hist.as_ref().expect("histogram state");
                let grower = HistGrower {
                    binned,
                    bundling,
                    location: HistGrower::locate(bundling),
                    features: (0..self.cols.len()).collect(),
                    g: &gw,
                    h: &hw,
                    lambda: params.lambda,
                    gamma: params.gamma,
                    min_samples_leaf: params.min_samples_leaf,
                };
                Ok(grow(
                    &grower,
                    rows,
                    params.max_depth,
                    params.min_samples_leaf,
                ))
            }
        }
    }
}

/// Grows a single tree for the given per-row gradients and hessians, as
/// the first round of `mode` would.
pub fn build_tree(
    x: &Array2<f64>,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
    mode: BoostMode,
) -> Result<DecisionTree, GbdtError> {
    params.validate()?;
    if g.len() != x.nrows() || h.len() != x.nrows() {
        return Err(GbdtError::LabelCountMismatch {
            rows: x.nrows(),
            labels: g.len().min(h.len()),
        });
    }
    if x.nrows() == 0 {
        return Err(GbdtError::EmptyDataset);
    }
    Builder::new(x, params, mode).tree(g, h, params, mode)
}

/// Fits `params.n_rounds` trees to the logistic loss. The initial margin is
/// the log-odds of the positive rate, so zero rounds predicts the prior.
pub fn fit_boosted(
    x: &Array2<f64>,
    y: &[u8],
    params: &TreeParams,
    mode: BoostMode,
) -> Result<BoostedModel, GbdtError> {
    params.validate()?;
    check_training_data(x, y)?;
    let n = y.len();
    let p = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
    let base_margin = (p / (1.0 - p)).ln();

    let mut builder = Builder::new(x, params, mode);
    let mut margins = vec![base_margin; n];
    let (mut g, mut h) = (vec![0.0; n], vec![0.0; n]);
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        for i in 0..n {
            (g[i], h[i]) = logistic_grad_hess(y[i], margins[i]);
        }
        let tree = builder.tree(&g, &h, params, mode)?;
        for (i, row) in x.rows().into_iter().enumerate() {
            let row = row
                .as_slice()
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| row.to_vec());
            margins[i] += params.learning_rate * tree.predict(&row);
        }
        trees.push(tree);
    }
    Ok(BoostedModel {
        mode,
        base_margin,
        learning_rate: params.learning_rate,
        trees,
        n_features: x.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> (Array2<f64>, Vec<u8>) {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64 - 9.5);
        let y = (0..20).map(|i| u8::from(i >= 10)).collect();
        (x, y)
    }

    #[test]
    fn zero_rounds_predicts_prior() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0, 1, 1, 1];
        let p = TreeParams {
            n_rounds: 0,
            ..TreeParams::default()
        };
        let m = fit_boosted(&x, &y, &p, BoostMode::SecondOrder).unwrap();
        assert!((m.predict_proba(&[5.0]).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = array![[0.0], [1.0]];
        let err = fit_boosted(&x, &[1, 1], &TreeParams::default(), BoostMode::ClassicGb);
        assert_eq!(err.unwrap_err(), GbdtError::SingleClassDataset);
    }

    #[test]
    fn depth_zero_is_a_single_leaf() {
        let x = array![[0.0], [1.0], [2.0]];
        let g = [1.0, 2.0, -0.5];
        let h = [0.5, 0.5, 0.5];
        let p = TreeParams {
            max_depth: 0,
            lambda: 1.0,
            ..TreeParams::default()
        };
        let t = build_tree(&x, &g, &h, &p, BoostMode::SecondOrder).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!((t.predict(&[0.0]) - (-2.5 / 2.5)).abs() < 1e-15);
    }

    #[test]
    fn every_mode_separates_the_toy_set() {
        let (x, y) = toy();
        for mode in BoostMode::ALL {
            let p = TreeParams {
                n_rounds: 30,
                min_samples_leaf: 1,
                ..TreeParams::default()
            };
            let m = fit_boosted(&x, &y, &p, mode).unwrap();
            for (i, &label) in y.iter().enumerate() {
                assert_eq!(
                    m.predict_label(&[x[[i, 0]]]).unwrap(),
                    label,
                    "{mode:?} row {i}"
                );
            }
        }
    }

    #[test]
    fn wrong_width_is_an_error() {
        let (x, y) = toy();
        let m = fit_boosted(&x, &y, &TreeParams::default(), BoostMode::ClassicGb).unwrap();
        assert!(matches!(
            m.predict_margin(&[0.0, 1.0]),
            Err(GbdtError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }
}
