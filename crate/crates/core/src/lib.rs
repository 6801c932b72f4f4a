//! Voice-based Parkinson's disease screening.
//!
//! The crate is organised along the processing pipeline:
//!
//! * [`features`] decodes sustained-vowel WAV recordings and computes the
//!   32 acoustic features (13 MFCC means, 13 delta means, 5 band HNR values
//!   and GNE).
//! * [`dataset`] ingests labelled feature tables, standardizes them and
//!   builds subject-grouped folds so replications never straddle a split.
//! * [`gbdt`] holds the tree learners: classic gradient boosting,
//!   second-order regularized boosting, histogram boosting with GOSS/EFB
//!   and bootstrap-aggregated classification trees.
//! * [`ensemble`] fuses the four classifiers with weighted hard voting.
//! * [`eval`] cross-validates, trains and persists the deployable bundle.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod ensemble;
pub mod eval;
pub mod features;
pub mod gbdt;

pub use ensemble::{ClassifierKind, ClassifierWeights, Prediction};
pub use eval::{EnsembleModel, EvalParams};
pub use features::{AudioClip, DspConfig, FeatureVector32, N_FEATURES};
