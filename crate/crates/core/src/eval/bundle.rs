use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::train::GridChoice;
use super::EvalError;
use crate::dataset::ScalerParams;
use crate::ensemble::{hard_vote, ClassifierKind, ClassifierWeights, Prediction};
use crate::features::N_FEATURES;
use crate::gbdt::{BaggedModel, BaggingParams, BoostedModel, DecisionTree, TreeParams};

pub const FORMAT_VERSION: u32 = 1;

/// Top-level fields of a bundle document, in canonical order.
pub const MODEL_FIELDS: [&str; 6] = [
    "format_version",
    "scaler",
    "models",
    "weights",
    "feature_names",
    "metadata",
];

/// Provenance recorded alongside the trained models.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub n_records: usize,
    pub n_subjects: usize,
    pub dataset_fingerprint: String,
    pub training_rows_fingerprint: String,
    /// Inner-split accuracy of each member, the basis of the weights.
    pub inner_accuracy: [f64; 4],
    /// Selected boosting hyperparameters, one per boosting member.
    pub selected: Vec<GridChoice>,
    pub tree_params: TreeParams,
    pub bagging_params: BaggingParams,
    pub grid: bool,
    pub trainer: String,
}

/// The deployable screening model: scaler, four classifiers and their
/// voting weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub scaler: ScalerParams,
    /// Boosting members in [`ClassifierKind::ALL`] order.
    pub boosted: [BoostedModel; 3],
    pub bagging: BaggedModel,
    pub weights: ClassifierWeights,
    pub feature_names: Vec<String>,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    mode: ClassifierKind,
    base_margin: f64,
    learning_rate: f64,
    trees: Vec<DecisionTree>,
}

#[derive(Serialize)]
struct BundleDoc<'a> {
    format_version: u32,
    scaler: &'a ScalerParams,
    models: Vec<ModelDoc>,
    weights: &'a ClassifierWeights,
    feature_names: &'a [String],
    metadata: &'a TrainingMetadata,
}

fn violation(field: impl Into<String>, detail: impl Into<String>) -> EvalError {
    EvalError::SchemaViolation {
        field: field.into(),
        detail: detail.into(),
    }
}

impl EnsembleModel {
    pub fn predict(&self, features: &[f64]) -> Result<Prediction, EvalError> {
        let raw: &[f64; N_FEATURES] = features.try_into().map_err(|_| EvalError::FeatureCount {
            expected: N_FEATURES,
            got: features.len(),
        })?;
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFiniteFeature { index });
        }
        let x = self.scaler.apply(raw);
        let mut votes = [0u8; 4];
        let mut probs = [0.0; 4];
        for (i, m) in self.boosted.iter().enumerate() {
            probs[i] = m.predict_proba(&x)?;
            votes[i] = u8::from(probs[i] >= 0.5);
        }
        probs[3] = self.bagging.predict_proba(&x)?;
        votes[3] = self.bagging.predict_label(&x)?;
        let mut p = hard_vote(votes, &self.weights)?;
        p.probabilities = Some(probs);
        Ok(p)
    }

    pub fn classifier_names() -> [&'static str; 4] {
        ClassifierKind::ALL.map(ClassifierKind::display_name)
    }

    fn doc(&self) -> BundleDoc<'_> {
        let mut models: Vec<ModelDoc> = self
            .boosted
            .iter()
            .zip(ClassifierKind::ALL)
            .map(|(m, kind)| ModelDoc {
                mode: kind,
                base_margin: m.base_margin,
                learning_rate: m.learning_rate,
                trees: m.trees.clone(),
            })
            .collect();
        models.push(ModelDoc {
            mode: ClassifierKind::Bagging,
            base_margin: 0.0,
            learning_rate: 1.0,
            trees: self.bagging.trees.clone(),
        });
        BundleDoc {
            format_version: FORMAT_VERSION,
            scaler: &self.scaler,
            models,
            weights: &self.weights,
            feature_names: &self.feature_names,
            metadata: &self.metadata,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.doc()).expect("bundle serializes")
    }

    /// Short content hash identifying this exact bundle.
    pub fn model_version(&self) -> String {
        let digest = Sha256::digest(self.to_json_string().as_bytes());
        format!("v{FORMAT_VERSION}-{}", &hex::encode(digest)[..12])
    }

    pub fn from_json_str(text: &str) -> Result<Self, EvalError> {
        let value: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) if e.is_eof() => {
                let done = completed_top_level_fields(text);
                let field = MODEL_FIELDS
                    .iter()
                    .find(|f| !done.iter().any(|d| d == *f))
                    .copied()
                    .unwrap_or("document");
                return Err(violation(
                    field,
                    "document ends before this field is complete",
                ));
            }
            Err(e) => return Err(violation("document", e.to_string())),
        };
        let Value::Object(obj) = value else {
            return Err(violation("document", "top level must be a JSON object"));
        };
        check_version(&obj)?;
        for f in MODEL_FIELDS {
            if !obj.contains_key(f) {
                return Err(violation(f, "missing required field"));
            }
        }
        if let Some(extra) = obj.keys().find(|k| !MODEL_FIELDS.contains(&k.as_str())) {
            return Err(violation(extra.as_str(), "unknown field"));
        }
        let scaler: ScalerParams = field(&obj, "scaler")?;
        let models: Vec<ModelDoc> = field(&obj, "models")?;
        let weights: ClassifierWeights = field(&obj, "weights")?;
        let feature_names: Vec<String> = field(&obj, "feature_names")?;
        let metadata: TrainingMetadata = field(&obj, "metadata")?;

        if !scaler.is_valid() {
            return Err(violation(
                "scaler",
                format!("need {N_FEATURES} finite means and positive finite deviations"),
            ));
        }
        if feature_names.len() != N_FEATURES {
            return Err(violation(
                "feature_names",
                format!("expected {N_FEATURES} names, found {}", feature_names.len()),
            ));
        }
        if models.len() != 4 {
            return Err(violation(
                "models",
                format!("expected 4 models, found {}", models.len()),
            ));
        }
        for (i, (m, kind)) in models.iter().zip(ClassifierKind::ALL).enumerate() {
            if m.mode != kind {
                return Err(violation(
                    format!("models[{i}].mode"),
                    format!("expected `{}`", kind.as_str()),
                ));
            }
            if !(m.base_margin.is_finite() && m.learning_rate.is_finite()) {
                return Err(violation(
                    format!("models[{i}]"),
                    "non-finite margin or learning rate",
                ));
            }
            for (t, tree) in m.trees.iter().enumerate() {
                tree.validate(N_FEATURES)
                    .map_err(|e| violation(format!("models[{i}].trees[{t}]"), e))?;
            }
        }
        if models[3].trees.is_empty() {
            return Err(violation(
                "models[3].trees",
                "bagging needs at least one tree",
            ));
        }

        let mut it = models.into_iter();
        let mut boost = || {
            let m = it.next().expect("four models checked");
            BoostedModel {
                mode: m.mode.boost_mode().expect("boosting member"),
                base_margin: m.base_margin,
                learning_rate: m.learning_rate,
                trees: m.trees,
                n_features: N_FEATURES,
            }
        };
        let boosted = [boost(), boost(), boost()];
        let bagging = BaggedModel {
            trees: it.next().expect("four models checked").trees,
            n_features: N_FEATURES,
        };
        Ok(Self {
            scaler,
            boosted,
            bagging,
            weights,
            feature_names,
            metadata,
        })
    }
}

fn check_version(obj: &Map<String, Value>) -> Result<(), EvalError> {
    let v = obj
        .get("format_version")
        .ok_or_else(|| violation("format_version", "missing required field"))?;
    match v.as_u64() {
        Some(n) if n == u64::from(FORMAT_VERSION) => Ok(()),
        _ => Err(EvalError::UnsupportedVersion {
            found: v.to_string(),
            supported: FORMAT_VERSION,
        }),
    }
}

fn field<T: serde::de::DeserializeOwned>(
    obj: &Map<String, Value>,
    name: &str,
) -> Result<T, EvalError> {
    T::deserialize(&obj[name]).map_err(|e| violation(name, e.to_string()))
}

/// Top-level keys of a (possibly truncated) JSON object whose values were
/// read to completion.
fn completed_top_level_fields(text: &str) -> Vec<String> {
    let mut done = Vec::new();
    let mut depth = 0usize;
    let (mut in_string, mut escaped) = (false, false);
    let (mut reading_key, mut after_colon) = (false, false);
    let mut key = String::new();
    let mut current: Option<String> = None;
    for c in text.chars() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
                if reading_key {
                    reading_key = false;
                    current = Some(std::mem::take(&mut key));
                }
                continue;
            }
            if reading_key {
                key.push(c);
            }
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                reading_key = depth == 1 && !after_colon;
            }
            ':' if depth == 1 => after_colon = true,
            ',' if depth == 1 => {
                done.extend(current.take());
                after_colon = false;
            }
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    done.extend(current.take());
                }
            }
            _ => {}
        }
    }
    done
}

pub fn save_model<W: Write>(model: &EnsembleModel, mut sink: W) -> Result<(), EvalError> {
    sink.write_all(model.to_json_string().as_bytes())?;
    sink.flush()?;
    Ok(())
}

pub fn load_model<R: Read>(mut source: R) -> Result<EnsembleModel, EvalError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    EnsembleModel::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scanner_tracks_completed_fields() {
        let text = r#"{"format_version":1,"scaler":{"mean":[1,2],"std":[3"#;
        assert_eq!(completed_top_level_fields(text), vec!["format_version"]);
        let text = r#"{"a":"x,}y","b":[{"c":1}],"d":"#;
        assert_eq!(completed_top_level_fields(text), vec!["a", "b"]);
    }
}
