//! Deterministic test signals: tones, noise and vowel-like phonation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AudioClip;

fn clip(samples: Vec<f64>, sample_rate_hz: u32) -> AudioClip {
    AudioClip::new(samples, sample_rate_hz).expect("synthetic samples stay within [-1, 1]")
}

fn n_samples(duration_s: f64, sample_rate_hz: u32) -> usize {
    (duration_s * f64::from(sample_rate_hz)).round() as usize
}

pub fn sine(freq_hz: f64, duration_s: f64, sample_rate_hz: u32, amplitude: f64) -> AudioClip {
    let sr = f64::from(sample_rate_hz);
    let amp = amplitude.clamp(0.0, 1.0);
    let samples = (0..n_samples(duration_s, sample_rate_hz))
        .map(|i| amp * (2.0 * PI * freq_hz * i as f64 / sr).sin())
        .collect();
    clip(samples, sample_rate_hz)
}

/// Uniform white noise in `[-amplitude, amplitude]`.
pub fn white_noise(duration_s: f64, sample_rate_hz: u32, amplitude: f64, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = amplitude.clamp(0.0, 1.0);
    let samples = (0..n_samples(duration_s, sample_rate_hz))
        .map(|_| amp * rng.random_range(-1.0..=1.0))
        .collect();
    clip(samples, sample_rate_hz)
}

/// Two-pole resonator `y[t] = x[t] + 2 r cos(w) y[t-1] - r^2 y[t-2]`.
fn resonate(input: &[f64], freq_hz: f64, bandwidth_hz: f64, sr: f64) -> Vec<f64> {
    let r = (-PI * bandwidth_hz / sr).exp();
    let c1 = 2.0 * r * (2.0 * PI * freq_hz / sr).cos();
    let c2 = -r * r;
    let mut out = vec![0.0; input.len()];
    for t in 0..input.len() {
        let y1 = if t >= 1 { out[t - 1] } else { 0.0 };
        let y2 = if t >= 2 { out[t - 2] } else { 0.0 };
        out[t] = input[t] + c1 * y1 + c2 * y2;
    }
    out
}

fn normalize_peak(mut samples: Vec<f64>, peak: f64) -> Vec<f64> {
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        samples.iter_mut().for_each(|s| *s *= peak / max);
    }
    samples
}

/// Impulse train at `f0_hz` passed through a single resonance, peak 0.5.
pub fn glottal_pulse_train(f0_hz: f64, duration_s: f64, sample_rate_hz: u32) -> AudioClip {
    let sr = f64::from(sample_rate_hz);
    let n = n_samples(duration_s, sample_rate_hz);
    let period = sr / f0_hz;
    let mut impulses = vec![0.0; n];
    let mut next = 0.0;
    while (next as usize) < n {
        impulses[next as usize] = 1.0;
        next += period;
    }
    let shaped = resonate(&impulses, 800.0, 120.0, sr);
    clip(normalize_peak(shaped, 0.5), sample_rate_hz)
}

/// Parameters of a synthetic sustained /a/.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VowelSpec {
    pub f0_hz: f64,
    /// Relative cycle-to-cycle period perturbation (e.g. 0.01 = 1 %).
    pub jitter: f64,
    /// Aspiration noise level relative to the pulse source.
    pub breathiness: f64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl Default for VowelSpec {
    fn default() -> Self {
        Self {
            f0_hz: 130.0,
            jitter: 0.005,
            breathiness: 0.05,
            duration_s: 5.0,
            sample_rate_hz: 44_100,
            seed: 0,
        }
    }
}

/// Jittered pulse source plus noise through three /a/ formants
/// (700, 1220, 2600 Hz), normalized to a 0.5 peak.
pub fn vowel_like(spec: &VowelSpec) -> AudioClip {
    let sr = f64::from(spec.sample_rate_hz);
    let n = n_samples(spec.duration_s, spec.sample_rate_hz);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut source = vec![0.0; n];
    let mut next = 0.0;
    while (next as usize) < n {
        source[next as usize] += 1.0;
        let jitter = 1.0 + spec.jitter * rng.random_range(-1.0..=1.0);
        next += sr / spec.f0_hz * jitter;
    }
    for s in source.iter_mut() {
        *s += spec.breathiness * rng.random_range(-1.0..=1.0);
    }
    let mut voiced = vec![0.0; n];
    for (freq, bw, gain) in [
        (700.0, 130.0, 1.0),
        (1220.0, 70.0, 0.5),
        (2600.0, 160.0, 0.25),
    ] {
        for (v, r) in voiced.iter_mut().zip(resonate(&source, freq, bw, sr)) {
            *v += gain * r;
        }
    }
    clip(normalize_peak(voiced, 0.5), spec.sample_rate_hz)
}
