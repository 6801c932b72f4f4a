use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{AudioClip, DspConfig, FeatureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Hamming,
    /// All-ones window; leaves frame samples untouched.
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hamming if len == 1 => vec![1.0],
            Window::Hamming => (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Row-major `n_frames x frame_len` block of windowed frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    data: Vec<f64>,
    frame_len: usize,
}

impl FrameMatrix {
    pub fn n_frames(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.frame_len)
    }
}

/// Slices the clip into overlapping windowed frames. The trailing partial
/// frame is dropped.
pub fn frame_signal(clip: &AudioClip, cfg: &DspConfig) -> Result<FrameMatrix, FeatureError> {
    if cfg.hop == 0 || cfg.frame_len == 0 {
        return Err(FeatureError::InvalidConfig(
            "frame length and hop must be positive".into(),
        ));
    }
    let samples = clip.samples();
    let frame_len = cfg.frame_len;
    if samples.len() < frame_len {
        return Err(FeatureError::ClipTooShortForFrame {
            samples: samples.len(),
            frame_len,
        });
    }
    let n_frames = (samples.len() - frame_len) / cfg.hop + 1;
    let window = cfg.window.coefficients(frame_len);
    let mut data = Vec::with_capacity(n_frames * frame_len);
    for f in 0..n_frames {
        let start = f * cfg.hop;
        data.extend(
            samples[start..start + frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w),
        );
    }
    Ok(FrameMatrix { data, frame_len })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(frame_len: usize, hop: usize, window: Window) -> DspConfig {
        DspConfig {
            frame_len,
            hop,
            window,
            ..DspConfig::default()
        }
    }

    fn ramp(n: usize) -> AudioClip {
        AudioClip::new((0..n).map(|i| i as f64 / n as f64).collect(), 44_100).unwrap()
    }

    #[test]
    fn frame_counts() {
        let c = cfg(1024, 512, Window::Hamming);
        assert_eq!(frame_signal(&ramp(1024), &c).unwrap().n_frames(), 1);
        assert_eq!(frame_signal(&ramp(2048), &c).unwrap().n_frames(), 3);
        assert_eq!(frame_signal(&ramp(2047), &c).unwrap().n_frames(), 2);
    }

    #[test]
    fn rectangular_window_is_identity() {
        let clip = ramp(2048);
        let frames = frame_signal(&clip, &cfg(1024, 512, Window::Rectangular)).unwrap();
        assert_eq!(frames.frame(1), &clip.samples()[512..1536]);
    }

    #[test]
    fn hamming_endpoints() {
        let w = Window::Hamming.coefficients(9);
        assert!((w[0] - 0.08).abs() < 1e-12);
        assert!((w[4] - 1.0).abs() < 1e-12);
        assert!((w[8] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        let err = frame_signal(&ramp(100), &cfg(1024, 512, Window::Hamming)).unwrap_err();
        assert_eq!(
            err,
            FeatureError::ClipTooShortForFrame {
                samples: 100,
                frame_len: 1024
            }
        );
    }
}
