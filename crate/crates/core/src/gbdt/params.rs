use serde::{Deserialize, Serialize};

use super::GbdtError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    ClassicGb,
    SecondOrder,
    HistogramGossEfb,
}

impl BoostMode {
    pub const ALL: [BoostMode; 3] = [
        BoostMode::ClassicGb,
        BoostMode::SecondOrder,
        BoostMode::HistogramGossEfb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoostMode::ClassicGb => "classic_gb",
            BoostMode::SecondOrder => "second_order",
            BoostMode::HistogramGossEfb => "histogram_goss_efb",
        }
    }
}

/// Hyperparameters for the boosting modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum gain a split must exceed.
    pub gamma: f64,
    pub learning_rate: f64,
    pub n_rounds: usize,
    /// Fraction of features considered per tree.
    pub colsample: f64,
    pub max_bins: usize,
    /// GOSS: fraction of largest-gradient rows always kept.
    pub goss_a: f64,
    /// GOSS: fraction of rows sampled from the remainder.
    pub goss_b: f64,
    pub efb_max_conflict: f64,
    /// Disabling GOSS trains histogram mode on every row with unit weight.
    pub goss_enabled: bool,
    pub efb_enabled: bool,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_samples_leaf: 2,
            lambda: 1.0,
            gamma: 0.0,
            learning_rate: 0.1,
            n_rounds: 200,
            colsample: 1.0,
            max_bins: 255,
            goss_a: 0.2,
            goss_b: 0.1,
            efb_max_conflict: 0.0,
            goss_enabled: true,
            efb_enabled: true,
            seed: 42,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |m: &str| Err(GbdtError::InvalidParams(m.to_string()));
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be finite and >= 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("colsample must lie in (0, 1]");
        }
        if self.max_bins < 2 {
            return bad("max_bins must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.efb_max_conflict) {
            return bad("efb_max_conflict must lie in [0, 1]");
        }
        validate_goss(self.goss_a, self.goss_b)
    }
}

pub(crate) fn validate_goss(a: f64, b: f64) -> Result<(), GbdtError> {
    let ok =
        (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a + b > 0.0 && a + b <= 1.0 + 1e-12;
    if ok {
        Ok(())
    } else {
        Err(GbdtError::InvalidFractions { a, b })
    }
}

/// Bootstrap-aggregated classification trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaggingParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Resample with replacement; off trains every tree on the full data.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for BaggingParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl BaggingParams {
    pub fn validate(&self) -> Result<(), GbdtError> {
        if self.n_trees == 0 {
            return Err(GbdtError::InvalidParams(
                "n_trees must be at least 1".into(),
            ));
        }
        if self.min_samples_leaf == 0 {
            return Err(GbdtError::InvalidParams(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TreeParams::default().validate().unwrap();
        BaggingParams::default().validate().unwrap();
    }

    #[test]
    fn goss_fraction_rules() {
        assert!(validate_goss(1.0, 0.0).is_ok());
        assert!(validate_goss(0.6, 0.5).is_err());
        assert!(validate_goss(0.0, 0.0).is_err());
        assert!(validate_goss(-0.1, 0.5).is_err());
    }
}
