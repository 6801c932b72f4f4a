use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    /// Counts paired labels; positives are `1`.
    pub fn from_labels(truth: &[u8], predicted: &[u8]) -> Self {
        assert_eq!(
            truth.len(),
            predicted.len(),
            "label slices differ in length"
        );
        let mut cm = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == 1, p == 1) {
                (true, true) => cm.tp += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fp += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Standard binary metrics. Any ratio with a zero denominator is reported
/// as 0 so reports stay numeric.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let (tp, tn, fp, fn_) = (cm.tp as f64, cm.tn as f64, cm.fp as f64, cm.fn_ as f64);
    let sensitivity = ratio(tp, tp + fn_);
    let precision = ratio(tp, tp + fp);
    let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    Ok(Metrics {
        accuracy: (tp + tn) / cm.total() as f64,
        sensitivity,
        specificity: ratio(tn, tn + fp),
        precision,
        f1: ratio(2.0 * precision * sensitivity, precision + sensitivity),
        mcc: ratio(tp * tn - fp * fn_, mcc_den),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_balanced_examples() {
        let perfect = metrics(&ConfusionMatrix {
            tp: 5,
            tn: 3,
            fp: 0,
            fn_: 0,
        })
        .unwrap();
        assert_eq!(
            [
                perfect.accuracy,
                perfect.sensitivity,
                perfect.specificity,
                perfect.precision,
                perfect.f1,
                perfect.mcc
            ],
            [1.0; 6]
        );
        let even = metrics(&ConfusionMatrix {
            tp: 1,
            tn: 1,
            fp: 1,
            fn_: 1,
        })
        .unwrap();
        assert_eq!((even.accuracy, even.mcc), (0.5, 0.0));
        assert_eq!(
            metrics(&ConfusionMatrix::default()),
            Err(EvalError::EmptyEvaluation)
        );
    }

    #[test]
    fn serializes_fn_field_name() {
        let s = serde_json::to_string(&ConfusionMatrix {
            tp: 1,
            tn: 2,
            fp: 3,
            fn_: 4,
        })
        .unwrap();
        assert_eq!(s, r#"{"tp":1,"tn":2,"fp":3,"fn":4}"#);
    }
}
