//! Tree ensembles built from scratch.
//!
//! Three boosting flavours share one tree representation and logistic loss:
//!
//! * [`BoostMode::ClassicGb`]: least-squares trees on the first-order
//!   residuals with a per-leaf Newton line search.
//! * [`BoostMode::SecondOrder`]: gradient/hessian statistics with L2 leaf
//!   regularization, split penalty and column subsampling on exact splits.
//! * [`BoostMode::HistogramGossEfb`]: quantile-binned features, one-side
//!   gradient sampling and exclusive feature bundling.
//!
//! [`fit_bagging`] grows full Gini trees on bootstrap resamples.

mod bagging;
mod binning;
mod boost;
mod efb;
mod goss;
mod grow;
mod loss;
mod params;
mod split;
mod tree;

pub use bagging::{fit_bagging, fit_gini_tree, BaggedModel};
pub use binning::{bin_features, BinnedFeatures, FeatureBins};
pub use boost::{build_tree, fit_boosted, BoostedModel};
pub use efb::{efb_bundle, Bundle, BundleMember, FeatureBundling};
pub use goss::{goss_sample, GossSample};
pub use grow::{best_split_histogram, best_split_over_features, SplitInfo};
pub use loss::{log_loss, logistic_grad_hess, sigmoid};
pub use params::{BaggingParams, BoostMode, TreeParams};
pub use split::{best_split_exact, split_gain, SplitCandidate};
pub use tree::{DecisionTree, Node};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbdtError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("training data contains no rows")]
    EmptyDataset,
    #[error("training labels contain a single class; both classes are required")]
    SingleClassDataset,
    #[error("invalid GOSS fractions a = {a}, b = {b}: need a, b in [0, 1], 0 < a + b <= 1")]
    InvalidFractions { a: f64, b: f64 },
    #[error("labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),
    #[error("feature matrix contains a non-finite value at row {row}, feature {feature}")]
    NonFiniteFeature { row: usize, feature: usize },
}

/// Shared input checks for the fit procedures.
pub(crate) fn check_training_data(x: &ndarray::Array2<f64>, y: &[u8]) -> Result<(), GbdtError> {
    if x.nrows() != y.len() {
        return Err(GbdtError::LabelCountMismatch {
            rows: x.nrows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(GbdtError::EmptyDataset);
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(GbdtError::InvalidLabel(bad));
    }
    if let Some(((row, feature), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(GbdtError::NonFiniteFeature { row, feature });
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(GbdtError::SingleClassDataset);
    }
    Ok(())
}
