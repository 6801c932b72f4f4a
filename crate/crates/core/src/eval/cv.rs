use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::{fit_on, index_fingerprint, GridChoice};
use super::{derive_seed, metrics, ConfusionMatrix, EvalError, EvalParams, Metrics};
use crate::dataset::{group_subjects, grouped_folds, Dataset};
use crate::ensemble::ClassifierKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldPlan {
    /// Stratified subject-grouped k-fold.
    KFold(usize),
    /// One fold per subject.
    LeaveOneSubjectOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_subjects: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// Test-fold accuracy of each member on its own.
    pub classifier_accuracy: [f64; 4],
    pub weights: [f64; 4],
    pub inner_accuracy: [f64; 4],
    pub selected: Vec<GridChoice>,
    pub train_fingerprint: String,
    pub test_fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single fold.
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: MeanStd,
    pub sensitivity: MeanStd,
    pub specificity: MeanStd,
    pub precision: MeanStd,
    pub f1: MeanStd,
    pub mcc: MeanStd,
    pub classifier_accuracy: [MeanStd; 4],
}

impl Aggregate {
    pub fn from_folds(folds: &[FoldReport]) -> Self {
        let col = |f: fn(&Metrics) -> f64| {
            MeanStd::of(&folds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        Self {
            accuracy: col(|m| m.accuracy),
            sensitivity: col(|m| m.sensitivity),
            specificity: col(|m| m.specificity),
            precision: col(|m| m.precision),
            f1: col(|m| m.f1),
            mcc: col(|m| m.mcc),
            classifier_accuracy: std::array::from_fn(|i| {
                MeanStd::of(
                    &folds
                        .iter()
                        .map(|r| r.classifier_accuracy[i])
                        .collect::<Vec<_>>(),
                )
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub plan: FoldPlan,
    pub k: usize,
    pub seed: u64,
    pub n_records: usize,
    pub n_subjects: usize,
    pub dataset_fingerprint: String,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
}

impl CvReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text_table(&self) -> String {
        let mut s = String::new();
        let plan = match self.plan {
            FoldPlan::KFold(k) => format!("{k}-fold subject-grouped"),
            FoldPlan::LeaveOneSubjectOut => "leave-one-subject-out".to_string(),
        };
        let _ = writeln!(
            s,
            "cross-validation: {plan}, seed {}, {} records, {} subjects",
            self.seed, self.n_records, self.n_subjects
        );
        let _ = writeln!(
            s,
            "{:>4} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8}  weights (gb / 2nd-order / hist / bag)",
            "fold", "n_test", "acc", "sens", "spec", "f1", "mcc"
        );
        for f in &self.folds {
            let m = &f.metrics;
            let _ = writeln!(
                s,
                "{:>4} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}  {:.3} / {:.3} / {:.3} / {:.3}",
                f.fold, f.n_test, m.accuracy, m.sensitivity, m.specificity, m.f1, m.mcc,
                f.weights[0], f.weights[1], f.weights[2], f.weights[3]
            );
        }
        let a = &self.aggregate;
        let pm = |m: MeanStd| format!("{:.4} ± {:.4}", m.mean, m.std);
        let _ = writeln!(s, "accuracy     {}", pm(a.accuracy));
        let _ = writeln!(s, "sensitivity  {}", pm(a.sensitivity));
        let _ = writeln!(s, "specificity  {}", pm(a.specificity));
        let _ = writeln!(s, "f1           {}", pm(a.f1));
        let _ = writeln!(s, "mcc          {}", pm(a.mcc));
        for (kind, m) in ClassifierKind::ALL.iter().zip(a.classifier_accuracy) {
            let _ = writeln!(s, "{:<18} accuracy {}", kind.display_name(), pm(m));
        }
        s
    }
}

fn fold_report(
    ds: &Dataset,
    fold: usize,
    test: &[usize],
    params: &EvalParams,
    seed: u64,
) -> Result<FoldReport, EvalError> {
    let records = ds.records();
    let mut is_test = vec![false; ds.len()];
    for &i in test {
        is_test[i] = true;
    }
    let train: Vec<usize> = (0..ds.len()).filter(|&i| !is_test[i]).collect();
    let model = fit_on(ds, &train, params, derive_seed(seed, 16 + fold as u64))?;

    let (mut truth, mut predicted) = (Vec::new(), Vec::new());
    let mut member_hits = [0usize; 4];
    for &i in test {
        let r = &records[i];
        let p = model.predict(r.features.as_array())?;
        let y = r.label.as_u8();
        truth.push(y);
        predicted.push(p.final_label);
        for (hits, v) in member_hits.iter_mut().zip(p.votes) {
            *hits += usize::from(v == y);
        }
    }
    let confusion = ConfusionMatrix::from_labels(&truth, &predicted);
    Ok(FoldReport {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        test_subjects: group_subjects(records, test)
            .into_iter()
            .map(|g| g.subject_id)
            .collect(),
        confusion,
        metrics: metrics(&confusion)?,
        classifier_accuracy: member_hits.map(|h| h as f64 / test.len() as f64),
        weights: model.weights.as_array(),
        inner_accuracy: model.metadata.inner_accuracy,
        selected: model.metadata.selected.clone(),
        train_fingerprint: model.metadata.training_rows_fingerprint.clone(),
        test_fingerprint: index_fingerprint(records, test),
    })
}

/// Subject-grouped cross-validation of the full training pipeline. Folds
/// run in parallel; each is seeded from `(seed, fold)` so the report does
/// not depend on scheduling.
pub fn cross_validate(
    ds: &Dataset,
    plan: FoldPlan,
    seed: u64,
    params: &EvalParams,
) -> Result<CvReport, EvalError> {
    params.validate()?;
    let k = match plan {
        FoldPlan::KFold(k) => k,
        FoldPlan::LeaveOneSubjectOut => ds.n_subjects(),
    };
    let folds = grouped_folds(ds, k, seed)?;
    let reports = folds
        .par_iter()
        .enumerate()
        .map(|(i, test)| fold_report(ds, i, test, params, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvReport {
        plan,
        k,
        seed,
        n_records: ds.len(),
        n_subjects: ds.n_subjects(),
        dataset_fingerprint: ds.fingerprint(),
        aggregate: Aggregate::from_folds(&reports),
        folds: reports,
    })
}
