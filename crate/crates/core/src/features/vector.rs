use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cepstrum::{delta, mfcc, N_CEPSTRA};
use super::gne::gne;
use super::hnr::hnr_band;
use super::{ensure_audible, ensure_min_duration, AudioClip, DspConfig, FeatureError};

pub const N_FEATURES: usize = 32;

/// Column names in feature-vector order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "mfcc0", "mfcc1", "mfcc2", "mfcc3", "mfcc4", "mfcc5", "mfcc6", "mfcc7", "mfcc8", "mfcc9",
    "mfcc10", "mfcc11", "mfcc12", "delta0", "delta1", "delta2", "delta3", "delta4", "delta5",
    "delta6", "delta7", "delta8", "delta9", "delta10", "delta11", "delta12", "hnr05", "hnr15",
    "hnr25", "hnr35", "hnr38", "gne",
];

const MFCC: std::ops::Range<usize> = 0..13;
const DELTA: std::ops::Range<usize> = 13..26;
const HNR: std::ops::Range<usize> = 26..31;
const GNE: usize = 31;

/// The 32 per-recording features: MFCC means, delta means, five band HNR
/// values (dB) and GNE, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector32(#[serde(with = "serde_array32")] [f64; N_FEATURES]);

impl FeatureVector32 {
    pub fn new(values: [f64; N_FEATURES]) -> Self {
        Self(values)
    }

    pub fn from_slice(values: &[f64]) -> Option<Self> {
        values.try_into().ok().map(Self)
    }

    pub fn as_array(&self) -> &[f64; N_FEATURES] {
        &self.0
    }

    pub fn mfcc_mean(&self) -> &[f64] {
        &self.0[MFCC]
    }

    pub fn delta_mean(&self) -> &[f64] {
        &self.0[DELTA]
    }

    pub fn hnr_db(&self) -> &[f64] {
        &self.0[HNR]
    }

    pub fn gne(&self) -> f64 {
        self.0[GNE]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<FeatureVector32> for [f64; N_FEATURES] {
    fn from(v: FeatureVector32) -> Self {
        v.0
    }
}

mod serde_array32 {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::N_FEATURES;

    pub fn serialize<S: Serializer>(v: &[f64; N_FEATURES], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; N_FEATURES], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        let len = v.len();
        v.try_into()
            .map_err(|_| D::Error::custom(format!("expected {N_FEATURES} features, got {len}")))
    }
}

fn row_means(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect()
}

/// Computes the full feature vector for one sustained-vowel recording.
pub fn extract_features(
    clip: &AudioClip,
    cfg: &DspConfig,
) -> Result<FeatureVector32, FeatureError> {
    cfg.validate(clip.sample_rate_hz())?;
    ensure_min_duration(clip)?;
    ensure_audible(clip.samples())?;

    // The stages are independent; errors are reported in stage order.
    let ((cepstra, gne_value), hnr) = rayon::join(
        || rayon::join(|| mfcc(clip, cfg), || gne(clip, cfg)),
        || {
            cfg.hnr_band_cutoffs_hz
                .par_iter()
                .map(|&cutoff| hnr_band(clip, cutoff, cfg))
                .collect::<Vec<_>>()
        },
    );
    let cepstra = cepstra?;
    let deltas = delta(&cepstra, cfg.delta_window);
    let mut out = [0.0; N_FEATURES];
    out[MFCC].copy_from_slice(&row_means(&cepstra)[..N_CEPSTRA]);
    out[DELTA].copy_from_slice(&row_means(&deltas)[..N_CEPSTRA]);
    for (slot, value) in out[HNR].iter_mut().zip(hnr) {
        *slot = value?;
    }
    out[GNE] = gne_value?;
    let v = FeatureVector32(out);
    if !v.is_finite() {
        return Err(FeatureError::InvalidConfig(
            "feature extraction produced a non-finite value".into(),
        ));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::synth::{self, VowelSpec};

    #[test]
    fn names_match_layout() {
        assert_eq!(FEATURE_NAMES[0], "mfcc0");
        assert_eq!(FEATURE_NAMES[DELTA.start], "delta0");
        assert_eq!(FEATURE_NAMES[HNR.start], "hnr05");
        assert_eq!(FEATURE_NAMES[GNE], "gne");
    }

    #[test]
    fn vowel_features_are_well_formed() {
        let clip = synth::vowel_like(&VowelSpec::default());
        let cfg = DspConfig::default();
        let v = extract_features(&clip, &cfg).unwrap();
        assert_eq!(v.mfcc_mean().len(), 13);
        assert_eq!(v.delta_mean().len(), 13);
        assert_eq!(v.hnr_db().len(), 5);
        assert!(v.is_finite());
        assert!(v.hnr_db().iter().all(|h| h.abs() <= 40.0));
        assert!(v.gne() > 0.0 && v.gne() <= 1.0);
        // deterministic down to the bit
        assert_eq!(extract_features(&clip, &cfg).unwrap(), v);
    }

    #[test]
    fn three_seconds_is_too_short() {
        let clip = synth::vowel_like(&VowelSpec {
            duration_s: 3.0,
            ..VowelSpec::default()
        });
        assert!(matches!(
            extract_features(&clip, &DspConfig::default()),
            Err(FeatureError::ClipTooShort { .. })
        ));
    }

    #[test]
    fn silent_clip_rejected() {
        let clip = AudioClip::new(vec![0.0; 6 * 44_100], 44_100).unwrap();
        assert!(matches!(
            extract_features(&clip, &DspConfig::default()),
            Err(FeatureError::SilentSignal { .. })
        ));
    }
}
