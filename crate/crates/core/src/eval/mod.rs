//! Training, cross-validation, metrics and the persisted model bundle.

mod bundle;
mod cv;
mod metrics;
mod train;

pub use bundle::{
    load_model, save_model, EnsembleModel, TrainingMetadata, FORMAT_VERSION, MODEL_FIELDS,
};
pub use cv::{cross_validate, Aggregate, CvReport, FoldPlan, FoldReport, MeanStd};
pub use metrics::{metrics, ConfusionMatrix, Metrics};
pub use train::{
    index_fingerprint, train_final, GridChoice, GRID_LEARNING_RATE, GRID_MAX_DEPTH, GRID_N_ROUNDS,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetError;
use crate::ensemble::EnsembleError;
use crate::gbdt::{BaggingParams, GbdtError, TreeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("nothing to evaluate: the confusion matrix is empty")]
    EmptyEvaluation,
    #[error("unsupported model format version {found}; this build reads version {supported}")]
    UnsupportedVersion { found: String, supported: u32 },
    #[error("model document violates the schema at `{field}`: {detail}")]
    SchemaViolation { field: String, detail: String },
    #[error("expected {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("feature {index} is not finite")]
    NonFiniteFeature { index: usize },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

/// Everything that controls training besides the data and the seed.
///
/// The seeds inside `tree` and `bagging` are replaced by values derived
/// from the run seed, so one `--seed` governs the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub tree: TreeParams,
    pub bagging: BaggingParams,
    /// Search the small hyperparameter grid on the inner split.
    pub grid: bool,
    /// Fraction of training subjects held out to measure weights.
    pub inner_fraction: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            tree: TreeParams::default(),
            bagging: BaggingParams::default(),
            grid: true,
            inner_fraction: 0.2,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.tree.validate()?;
        self.bagging.validate()?;
        if !(self.inner_fraction > 0.0 && self.inner_fraction < 1.0) {
            return Err(
                GbdtError::InvalidParams("inner_fraction must lie in (0, 1)".into()).into(),
            );
        }
        Ok(())
    }
}

/// Independent seed for sub-task `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}
