//! Labelled feature tables: ingestion, standardization and subject-grouped
//! fold assignment.

mod folds;
mod parse;
mod scaler;
mod synthetic;

pub use folds::{group_subjects, grouped_folds, grouped_holdout, SubjectGroup};
pub use parse::{
    parse_dataset_csv, parse_feature_csv, write_dataset_csv, write_feature_csv, ColumnMapping,
    ParseOptions,
};
pub use scaler::{fit_scaler, ScalerParams};
pub use synthetic::synthetic_dataset;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{FeatureVector32, FEATURE_NAMES, N_FEATURES};

/// Replications recorded per subject.
pub const REPLICATIONS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing column `{column}` (available: {available})")]
    MissingColumn { column: String, available: String },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumericValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label `{value}` is not one of 0/1")]
    InvalidLabel { row: usize, value: String },
    #[error("subject `{subject}`: {detail}")]
    ReplicationMismatch { subject: String, detail: String },
    #[error("subject `{subject}` has records with different labels")]
    InconsistentLabel { subject: String },
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("need at least {needed} subjects for {k} folds, found {found}")]
    TooFewSubjects {
        k: usize,
        needed: usize,
        found: usize,
    },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("invalid column mapping: {0}")]
    InvalidMapping(String),
}

/// Binary screening label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Healthy = 0,
    Parkinson = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Parkinson
        } else {
            Label::Healthy
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Label::Healthy),
            1 => Ok(Label::Parkinson),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub subject_id: String,
    pub replication_idx: u8,
    pub features: FeatureVector32,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking the per-subject invariants.
    ///
    /// `strict` demands exactly three replications (indices 1, 2, 3) per
    /// subject; otherwise offending subjects are dropped with a warning.
    pub fn new(records: Vec<Record>, strict: bool) -> Result<Self, DatasetError> {
        let mut by_subject: BTreeMap<&str, Vec<&Record>> = BTreeMap::new();
        for r in &records {
            by_subject.entry(&r.subject_id).or_default().push(r);
        }
        let mut dropped = Vec::new();
        for (subject, recs) in &by_subject {
            let problem = subject_problem(subject, recs);
            match problem {
                None => {}
                Some(err) if strict => return Err(err),
                Some(err) => {
                    log::warn!("dropping {err}");
                    dropped.push(subject.to_string());
                }
            }
        }
        let records: Vec<Record> = records
            .into_iter()
            .filter(|r| !dropped.contains(&r.subject_id))
            .collect();
        if records.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        Ok(Self {
            records,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_subjects(&self) -> usize {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.subject_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn feature_rows(&self) -> Vec<[f64; N_FEATURES]> {
        self.records
            .iter()
            .map(|r| *r.features.as_array())
            .collect()
    }

    /// SHA-256 over subject ids, replication indices, labels and the exact
    /// bit patterns of every feature, in record order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(r.subject_id.as_bytes());
            h.update([0u8, r.replication_idx, r.label.as_u8()]);
            for v in r.features.as_array() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

fn subject_problem(subject: &str, recs: &[&Record]) -> Option<DatasetError> {
    let label = recs[0].label;
    if recs.iter().any(|r| r.label != label) {
        return Some(DatasetError::InconsistentLabel {
            subject: subject.to_string(),
        });
    }
    let mut reps: Vec<u8> = recs.iter().map(|r| r.replication_idx).collect();
    reps.sort_unstable();
    if reps != [1, 2, 3] {
        return Some(DatasetError::ReplicationMismatch {
            subject: subject.to_string(),
            detail: format!("expected replications 1, 2, 3; found {reps:?}"),
        });
    }
    None
}
