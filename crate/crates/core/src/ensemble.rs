//! Weighted hard voting over the four classifiers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gbdt::BoostMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("vote {index} is {value}; votes must be 0 or 1")]
    InvalidVote { index: usize, value: u8 },
    #[error("invalid classifier weights: {0}")]
    InvalidWeights(String),
    #[error("accuracy {value} for classifier {index} lies outside [0, 1]")]
    InvalidAccuracy { index: usize, value: f64 },
}

/// The ensemble members, in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    ClassicGb,
    SecondOrder,
    HistogramGossEfb,
    Bagging,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::ClassicGb,
        ClassifierKind::SecondOrder,
        ClassifierKind::HistogramGossEfb,
        ClassifierKind::Bagging,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::ClassicGb => "classic_gb",
            ClassifierKind::SecondOrder => "second_order",
            ClassifierKind::HistogramGossEfb => "histogram_goss_efb",
            ClassifierKind::Bagging => "bagging",
        }
    }

    /// Human-readable name for reports and the UI.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::ClassicGb => "Gradient Boosting",
            ClassifierKind::SecondOrder => "XGBoost-style",
            ClassifierKind::HistogramGossEfb => "LightGBM-style",
            ClassifierKind::Bagging => "Bagging",
        }
    }

    pub fn boost_mode(self) -> Option<BoostMode> {
        match self {
            ClassifierKind::ClassicGb => Some(BoostMode::ClassicGb),
            ClassifierKind::SecondOrder => Some(BoostMode::SecondOrder),
            ClassifierKind::HistogramGossEfb => Some(BoostMode::HistogramGossEfb),
            ClassifierKind::Bagging => None,
        }
    }
}

/// Non-negative voting weights summing to one, indexed like
/// [`ClassifierKind::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ClassifierWeights([f64; 4]);

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl ClassifierWeights {
    pub fn new(w: [f64; 4]) -> Result<Self, EnsembleError> {
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(EnsembleError::InvalidWeights(format!(
                "weight {bad} is negative or non-finite"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(EnsembleError::InvalidWeights(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(w))
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

impl TryFrom<[f64; 4]> for ClassifierWeights {
    type Error = EnsembleError;
    fn try_from(w: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<ClassifierWeights> for [f64; 4] {
    fn from(w: ClassifierWeights) -> Self {
        w.0
    }
}

/// Accuracy-proportional weights; all-zero accuracies fall back to uniform.
pub fn compute_weights(accuracy: [f64; 4]) -> Result<ClassifierWeights, EnsembleError> {
    for (index, &value) in accuracy.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(EnsembleError::InvalidAccuracy { index, value });
        }
    }
    let sum: f64 = accuracy.iter().sum();
    if sum == 0.0 {
        return Ok(ClassifierWeights::uniform());
    }
    ClassifierWeights::new(accuracy.map(|a| a / sum))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub votes: [u8; 4],
    pub tally_pos: f64,
    pub tally_neg: f64,
    pub final_label: u8,
    /// Per-classifier positive-class probability, when known.
    pub probabilities: Option<[f64; 4]>,
}

/// Weighted hard vote. An exact tie goes to the positive class.
pub fn hard_vote(votes: [u8; 4], weights: &ClassifierWeights) -> Result<Prediction, EnsembleError> {
    if let Some((index, &value)) = votes.iter().enumerate().find(|(_, &v)| v > 1) {
        return Err(EnsembleError::InvalidVote { index, value });
    }
    // summing in sorted order makes the tally independent of member order
    let mut pos: Vec<f64> = votes
        .iter()
        .zip(weights.0)
        .filter(|(&v, _)| v == 1)
        .map(|(_, w)| w)
        .collect();
    pos.sort_by(f64::total_cmp);
    let tally_pos: f64 = pos.iter().sum();
    let tally_neg = 1.0 - tally_pos;
    Ok(Prediction {
        votes,
        tally_pos,
        tally_neg,
        final_label: u8::from(tally_pos >= tally_neg),
        probabilities: None,
    })
}
