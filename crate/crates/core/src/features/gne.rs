//! Glottal-to-noise excitation ratio.
//!
//! The clip is resampled to 10 kHz and inverse filtered with a block-wise
//! order-13 linear predictor. The excitation is split into 1 kHz wide bands
//! centred every 500 Hz from 500 Hz to 4.5 kHz; the Hilbert envelope of each
//! band is taken and GNE is the largest zero-lag normalized correlation
//! between envelopes of bands whose centres are at least 500 Hz apart.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::spectrum::{forward, inverse, resample};
use super::{ensure_audible, ensure_min_duration, AudioClip, DspConfig, FeatureError};

pub(crate) const GNE_RATE_HZ: u32 = 10_000;
pub(crate) const LPC_ORDER: usize = 13;
const LPC_WINDOW: usize = 300; // 30 ms at 10 kHz
const LPC_HOP: usize = 100; // 10 ms
const BAND_WIDTH_HZ: f64 = 1000.0;
const BAND_STEP_HZ: f64 = 500.0;
const FIRST_CENTER_HZ: f64 = 500.0;
const LAST_CENTER_HZ: f64 = 4500.0;
const MIN_CENTER_DISTANCE_HZ: f64 = 500.0;

/// GNE in (0, 1]. `_cfg` is accepted for signature symmetry with the other
/// extractors; GNE has its own fixed analysis parameters.
pub fn gne(clip: &AudioClip, _cfg: &DspConfig) -> Result<f64, FeatureError> {
    ensure_min_duration(clip)?;
    ensure_audible(clip.samples())?;

    let mut planner = FftPlanner::new();
    let x = resample(
        &mut planner,
        clip.samples(),
        clip.sample_rate_hz(),
        GNE_RATE_HZ,
    );
    let excitation = inverse_filter(&x);
    let envelopes = band_envelopes(&mut planner, &excitation);

    let centers = band_centers();
    let mut best = 0.0f64;
    for i in 0..envelopes.len() {
        for j in i + 1..envelopes.len() {
            if centers[j] - centers[i] < MIN_CENTER_DISTANCE_HZ {
                continue;
            }
            if let Some(rho) = normalized_correlation(&envelopes[i], &envelopes[j]) {
                best = best.max(rho);
            }
        }
    }
    Ok(best.clamp(f64::EPSILON, 1.0))
}

pub(crate) fn band_centers() -> Vec<f64> {
    let n = ((LAST_CENTER_HZ - FIRST_CENTER_HZ) / BAND_STEP_HZ).round() as usize + 1;
    (0..n)
        .map(|i| FIRST_CENTER_HZ + BAND_STEP_HZ * i as f64)
        .collect()
}

/// Predictor coefficients `a[1..=order]` (with implicit `a[0] = 1`) by the
/// Levinson-Durbin recursion. Returns all zeros for a silent window.
pub(crate) fn lpc(window: &[f64], order: usize) -> Vec<f64> {
    let mut r = vec![0.0; order + 1];
    for (lag, rl) in r.iter_mut().enumerate() {
        *rl = window[lag..].iter().zip(window).map(|(a, b)| a * b).sum();
    }
    let mut a = vec![0.0; order + 1];
    if r[0] <= 0.0 {
        return a[1..].to_vec();
    }
    // light white-noise correction keeps the recursion well conditioned
    r[0] *= 1.0 + 1e-9;
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    a[1..].to_vec()
}

/// Prediction residual with coefficients refreshed every 10 ms from a
/// Hann-windowed 30 ms analysis window centred on the block.
fn inverse_filter(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let hann: Vec<f64> = (0..LPC_WINDOW)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (LPC_WINDOW - 1) as f64).cos())
        .collect();
    let mut residual = vec![0.0; n];
    let mut windowed = vec![0.0; LPC_WINDOW];
    let mut block_start = 0;
    while block_start < n {
        let block_end = (block_start + LPC_HOP).min(n);
        let center = (block_start + block_end) / 2;
        let win_start = center as isize - (LPC_WINDOW / 2) as isize;
        for (i, w) in windowed.iter_mut().enumerate() {
            let idx = win_start + i as isize;
            *w = if idx >= 0 && (idx as usize) < n {
                x[idx as usize] * hann[i]
            } else {
                0.0
            };
        }
        let a = lpc(&windowed, LPC_ORDER);
        for t in block_start..block_end {
            let mut e = x[t];
            for (k, ak) in a.iter().enumerate() {
                if t > k {
                    e += ak * x[t - k - 1];
                }
            }
            residual[t] = e;
        }
        block_start = block_end;
    }
    residual
}

/// Hilbert envelopes of the excitation in each analysis band, using a
/// raised-cosine band shape applied to the positive-frequency half only.
fn band_envelopes(planner: &mut FftPlanner<f64>, excitation: &[f64]) -> Vec<Vec<f64>> {
    let n = excitation.len();
    let len = n.next_power_of_two();
    let spec = forward(planner, excitation, len);
    let bin_hz = f64::from(GNE_RATE_HZ) / len as f64;
    let half_width = BAND_WIDTH_HZ / 2.0;
    band_centers()
        .into_iter()
        .map(|center| {
            let mut z = vec![Complex64::new(0.0, 0.0); len];
            for (k, zk) in z.iter_mut().enumerate().take(len / 2 + 1) {
                let offset = k as f64 * bin_hz - center;
                if offset.abs() < half_width {
                    let gain = 0.5 * (1.0 + (PI * offset / half_width).cos());
                    let scale = if k == 0 || k == len / 2 { 1.0 } else { 2.0 };
                    *zk = spec[k] * (gain * scale);
                }
            }
            inverse(planner, &mut z);
            z[..n].iter().map(|c| c.norm()).collect()
        })
        .collect()
}

pub(crate) fn normalized_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let ea: f64 = a.iter().map(|x| x * x).sum();
    let eb: f64 = b.iter().map(|x| x * x).sum();
    let denom = (ea * eb).sqrt();
    (denom > 0.0).then(|| dot / denom)
}
