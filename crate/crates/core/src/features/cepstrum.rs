use std::f64::consts::PI;

use rustfft::FftPlanner;

use super::frame::frame_signal;
use super::mel::mel_filterbank;
use super::spectrum::power_spectrum_with;
use super::{AudioClip, DspConfig, FeatureError};

/// Number of cepstral coefficients kept (c0..c12).
pub const N_CEPSTRA: usize = 13;

/// Orthonormal DCT-II basis, `n_out x n_in`.
struct DctBasis {
    rows: Vec<Vec<f64>>,
}

impl DctBasis {
    fn new(n_in: usize, n_out: usize) -> Self {
        let n = n_in as f64;
        let rows = (0..n_out)
            .map(|k| {
                let scale = if k == 0 {
                    (1.0 / n).sqrt()
                } else {
                    (2.0 / n).sqrt()
                };
                (0..n_in)
                    .map(|i| scale * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                    .collect()
            })
            .collect();
        Self { rows }
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(input).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// First `n_out` coefficients of the orthonormal DCT-II of `input`.
pub fn dct_ii(input: &[f64], n_out: usize) -> Vec<f64> {
    DctBasis::new(input.len(), n_out.min(input.len())).apply(input)
}

/// Mel-frequency cepstral coefficients, returned as 13 rows (c0..c12) of
/// one value per frame.
pub fn mfcc(clip: &AudioClip, cfg: &DspConfig) -> Result<Vec<Vec<f64>>, FeatureError> {
    let frames = frame_signal(clip, cfg)?;
    if !frames.frame_len().is_power_of_two() {
        return Err(FeatureError::NonPowerOfTwoLength(frames.frame_len()));
    }
    let bank = mel_filterbank(cfg, clip.sample_rate_hz())?;
    let n_out = N_CEPSTRA.min(bank.n_filters());
    let basis = DctBasis::new(bank.n_filters(), n_out);
    let mut planner = FftPlanner::new();

    let mut rows: Vec<Vec<f64>> = (0..N_CEPSTRA)
        .map(|_| Vec::with_capacity(frames.n_frames()))
        .collect();
    for frame in frames.frames() {
        let power = power_spectrum_with(&mut planner, frame);
        let log_mel: Vec<f64> = bank
            .apply(&power)
            .into_iter()
            .map(|e| e.max(cfg.log_floor).ln())
            .collect();
        let coeffs = basis.apply(&log_mel);
        for (k, row) in rows.iter_mut().enumerate() {
            row.push(coeffs.get(k).copied().unwrap_or(0.0));
        }
    }
    Ok(rows)
}

/// Regression deltas along time for each row, with the first and last
/// frames replicated `window` times at the edges.
pub fn delta(coeffs: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let denom = 2.0 * (1..=window).map(|m| (m * m) as f64).sum::<f64>();
    coeffs
        .iter()
        .map(|row| {
            let t_len = row.len() as isize;
            let at = |t: isize| row[t.clamp(0, t_len - 1) as usize];
            (0..t_len)
                .map(|t| {
                    let num: f64 = (1..=window as isize)
                        .map(|m| m as f64 * (at(t + m) - at(t - m)))
                        .sum();
                    num / denom
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_of_constant_only_has_dc() {
        let out = dct_ii(&[3.5; 26], 13);
        assert!((out[0] - 3.5 * 26f64.sqrt()).abs() < 1e-12);
        assert!(out[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn silence_floors_every_band() {
        let clip = AudioClip::new(vec![0.0; 8192], 44_100).unwrap();
        let rows = mfcc(&clip, &DspConfig::default()).unwrap();
        assert_eq!(rows.len(), 13);
        assert_eq!(rows[0].len(), (8192 - 2048) / 512 + 1);
        let c0 = 1e-10f64.ln() * 26f64.sqrt();
        for t in 0..rows[0].len() {
            assert!((rows[0][t] - c0).abs() < 1e-9);
            for row in &rows[1..] {
                assert!(row[t].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_of_constant_and_ramp() {
        let constant = vec![vec![2.0; 10]; 13];
        assert!(delta(&constant, 2).iter().flatten().all(|&d| d == 0.0));

        let ramp = vec![(0..20).map(|t| 0.75 * t as f64).collect::<Vec<_>>()];
        let d = delta(&ramp, 2);
        for t in 2..18 {
            assert!((d[0][t] - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn single_frame_delta_is_zero() {
        assert_eq!(delta(&[vec![4.0]], 2), vec![vec![0.0]]);
    }
}
