//! Acoustic feature extraction from sustained-vowel recordings.

mod audio;
mod cepstrum;
mod frame;
mod gne;
mod hnr;
mod mel;
mod spectrum;
pub mod synth;
mod vector;

pub use audio::{decode_wav, encode_wav, AudioClip};
pub use cepstrum::{dct_ii, delta, mfcc, N_CEPSTRA};
pub use frame::{frame_signal, FrameMatrix, Window};
pub use gne::gne;
pub use hnr::hnr_band;
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, FilterBank};
pub use spectrum::power_spectrum;
pub use vector::{extract_features, FeatureVector32, FEATURE_NAMES, N_FEATURES};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum phonation length accepted for a recording, in seconds.
pub const MIN_DURATION_S: f64 = 5.0;

/// RMS level at or below which a clip is treated as silence.
pub const SILENCE_RMS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("audio stream contains no samples")]
    EmptyAudio,
    #[error("sample {index} = {value} lies outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("clip has {samples} samples, shorter than one {frame_len}-sample frame")]
    ClipTooShortForFrame { samples: usize, frame_len: usize },
    #[error("clip lasts {duration_s:.2} s; the recording protocol requires a sustained vowel of at least {min_s} s")]
    ClipTooShort { duration_s: f64, min_s: f64 },
    #[error("signal is silent (RMS {rms:.3e})")]
    SilentSignal { rms: f64 },
    #[error("FFT length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("invalid frequency range: fmin {fmin} Hz, fmax {fmax} Hz, Nyquist {nyquist} Hz")]
    InvalidFrequencyRange { fmin: f64, fmax: f64, nyquist: f64 },
    #[error("invalid DSP configuration: {0}")]
    InvalidConfig(String),
}

/// Short-time analysis parameters.
///
/// Defaults target 44.1 kHz sustained vowels. `fmax_hz = None` means the
/// Nyquist frequency of whatever clip is being analysed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DspConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub n_mel_filters: usize,
    pub fmin_hz: f64,
    pub fmax_hz: Option<f64>,
    pub delta_window: usize,
    pub log_floor: f64,
    pub hnr_band_cutoffs_hz: [f64; 5],
    pub hnr_pitch_range_hz: [f64; 2],
    pub hnr_cap_db: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            frame_len: 2048,
            hop: 512,
            window: Window::Hamming,
            n_mel_filters: 26,
            fmin_hz: 0.0,
            fmax_hz: None,
            delta_window: 2,
            log_floor: 1e-10,
            hnr_band_cutoffs_hz: [500.0, 1500.0, 2500.0, 3500.0, 3800.0],
            hnr_pitch_range_hz: [70.0, 400.0],
            hnr_cap_db: 40.0,
        }
    }
}

impl DspConfig {
    /// FFT size; always equal to the frame length.
    pub fn n_fft(&self) -> usize {
        self.frame_len
    }

    pub fn fmax_for(&self, sample_rate_hz: u32) -> f64 {
        self.fmax_hz.unwrap_or(f64::from(sample_rate_hz) / 2.0)
    }

    /// Checks the parameters that do not depend on a particular clip length.
    pub fn validate(&self, sample_rate_hz: u32) -> Result<(), FeatureError> {
        let nyquist = f64::from(sample_rate_hz) / 2.0;
        let bad = |msg: String| Err(FeatureError::InvalidConfig(msg));
        if self.hop == 0 {
            return bad("hop must be at least 1 sample".into());
        }
        if !self.frame_len.is_power_of_two() {
            return Err(FeatureError::NonPowerOfTwoLength(self.frame_len));
        }
        if self.n_mel_filters == 0 {
            return bad("need at least one mel filter".into());
        }
        if self.delta_window == 0 {
            return bad("delta window must be at least 1".into());
        }
        if !(self.log_floor > 0.0) {
            return bad("log floor must be positive".into());
        }
        let fmax = self.fmax_for(sample_rate_hz);
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < fmax && fmax <= nyquist) {
            return Err(FeatureError::InvalidFrequencyRange {
                fmin: self.fmin_hz,
                fmax,
                nyquist,
            });
        }
        let cuts = &self.hnr_band_cutoffs_hz;
        if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts[0] <= 0.0 || cuts[4] >= nyquist {
            return bad(format!(
                "HNR band cutoffs {cuts:?} must be positive, ascending and below {nyquist} Hz"
            ));
        }
        let [lo, hi] = self.hnr_pitch_range_hz;
        if !(lo > 0.0 && lo < hi) {
            return bad(format!("HNR pitch range [{lo}, {hi}] Hz is empty"));
        }
        if !(self.hnr_cap_db > 0.0) {
            return bad("HNR cap must be positive".into());
        }
        Ok(())
    }
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

pub(crate) fn ensure_audible(samples: &[f64]) -> Result<(), FeatureError> {
    let rms = rms(samples);
    if rms <= SILENCE_RMS {
        return Err(FeatureError::SilentSignal { rms });
    }
    Ok(())
}

pub(crate) fn ensure_min_duration(clip: &AudioClip) -> Result<(), FeatureError> {
    let duration_s = clip.duration_s();
    if duration_s < MIN_DURATION_S {
        return Err(FeatureError::ClipTooShort {
            duration_s,
            min_s: MIN_DURATION_S,
        });
    }
    Ok(())
}
