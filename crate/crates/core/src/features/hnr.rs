use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::spectrum::convolve_same;
use super::{ensure_audible, AudioClip, DspConfig, FeatureError};

/// Windowed-sinc low-pass kernel (Hamming), unit DC gain, ~10 ms long.
pub(crate) fn lowpass_kernel(cutoff_hz: f64, sample_rate_hz: u32) -> Vec<f64> {
    let sr = f64::from(sample_rate_hz);
    let half = ((0.005 * sr).round() as usize).max(1);
    let len = 2 * half + 1;
    let fc = cutoff_hz / sr;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let m = i as f64 - half as f64;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * m).sin() / (PI * m)
            };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let gain: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= gain);
    taps
}

/// Largest normalized autocorrelation over lags `lo..=hi`, given the raw
/// autocorrelation `acf` of `frame`.
///
/// For each lag the overlap products are divided by the geometric mean of
/// the energies of the two overlapping segments, so an exactly periodic
/// frame reaches 1 at its period.
fn peak_normalized(acf: impl Fn(usize) -> f64, frame: &[f64], lo: usize, hi: usize) -> f64 {
    let n = frame.len();
    let mut energy = Vec::with_capacity(n + 1);
    energy.push(0.0);
    let mut acc = 0.0;
    for &x in frame {
        acc += x * x;
        energy.push(acc);
    }

    let mut best = f64::NEG_INFINITY;
    for lag in lo..=hi.min(n - 1) {
        let head = energy[n - lag];
        let tail = energy[n] - energy[lag];
        let denom = (head * tail).sqrt();
        let r = if denom > 0.0 { acf(lag) / denom } else { 0.0 };
        best = best.max(r);
    }
    best
}

/// Peak normalized autocorrelation of every frame.
///
/// Frames are transformed two at a time: one real frame in the real part
/// and the next in the imaginary part of a single complex FFT. Both power
/// spectra are real and even, so one inverse transform returns both
/// autocorrelations, again in the real and imaginary parts.
pub(crate) fn frame_peaks(
    planner: &mut FftPlanner<f64>,
    frames: &[&[f64]],
    lo: usize,
    hi: usize,
) -> Vec<f64> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let len = (2 * first.len()).next_power_of_two();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut scratch = vec![
        Complex64::ZERO;
        fwd.get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len())
    ];
    let mut buf = vec![Complex64::ZERO; len];
    let mut power = vec![Complex64::ZERO; len];
    let scale = 1.0 / len as f64;
    let mut peaks = Vec::with_capacity(frames.len());
    for pair in frames.chunks(2) {
        buf.fill(Complex64::ZERO);
        for (b, &x) in buf.iter_mut().zip(pair[0].iter()) {
            b.re = x;
        }
        if let Some(second) = pair.get(1) {
            for (b, &x) in buf.iter_mut().zip(second.iter()) {
                b.im = x;
            }
        }
        fwd.process_with_scratch(&mut buf, &mut scratch);
        for k in 0..len {
            let z = buf[k];
            let zc = buf[(len - k) % len].conj();
            // spectra of the real and imaginary inputs
            let a = (z + zc) * 0.5;
            let b = (z - zc) * Complex64::new(0.0, -0.5);
            power[k] = Complex64::new(a.norm_sqr(), b.norm_sqr());
        }
        inv.process_with_scratch(&mut power, &mut scratch);
        peaks.push(peak_normalized(
            |lag| power[lag].re * scale,
            pair[0],
            lo,
            hi,
        ));
        if let Some(second) = pair.get(1) {
            peaks.push(peak_normalized(|lag| power[lag].im * scale, second, lo, hi));
        }
    }
    peaks
}

pub(crate) fn frame_hnr_db(r: f64, cap_db: f64) -> f64 {
    if r <= 0.0 {
        return -cap_db;
    }
    if r >= 1.0 {
        return cap_db;
    }
    (10.0 * (r / (1.0 - r)).log10()).clamp(-cap_db, cap_db)
}

/// Mean frame harmonics-to-noise ratio (dB) after low-passing the clip at
/// `band_fmax_hz`.
///
/// Only the steady-state part of the filtered signal is analysed; frames
/// are unwindowed, `cfg.frame_len` long and `cfg.hop` apart. Frame values
/// are clamped to `±cfg.hnr_cap_db`.
pub fn hnr_band(clip: &AudioClip, band_fmax_hz: f64, cfg: &DspConfig) -> Result<f64, FeatureError> {
    let sr = f64::from(clip.sample_rate_hz());
    if !(band_fmax_hz > 0.0 && band_fmax_hz < sr / 2.0) {
        return Err(FeatureError::InvalidConfig(format!(
            "HNR band edge {band_fmax_hz} Hz must lie in (0, {}) Hz",
            sr / 2.0
        )));
    }
    if cfg.hop == 0 {
        return Err(FeatureError::InvalidConfig(
            "hop must be at least 1 sample".into(),
        ));
    }
    ensure_audible(clip.samples())?;

    let mut planner = FftPlanner::new();
    let kernel = lowpass_kernel(band_fmax_hz, clip.sample_rate_hz());
    let filtered = convolve_same(&mut planner, clip.samples(), &kernel);
    let half = kernel.len() / 2;
    let steady = if filtered.len() > 2 * half + cfg.frame_len {
        &filtered[half..filtered.len() - half]
    } else {
        &filtered[..]
    };
    if steady.len() < cfg.frame_len {
        return Err(FeatureError::ClipTooShortForFrame {
            samples: steady.len(),
            frame_len: cfg.frame_len,
        });
    }

    let [f0_min, f0_max] = cfg.hnr_pitch_range_hz;
    let lag_lo = ((sr / f0_max).floor() as usize).max(1);
    let lag_hi = (sr / f0_min).ceil() as usize;
    let n_frames = (steady.len() - cfg.frame_len) / cfg.hop + 1;
    let frames: Vec<&[f64]> = (0..n_frames)
        .map(|f| &steady[f * cfg.hop..f * cfg.hop + cfg.frame_len])
        .collect();
    let total: f64 = frame_peaks(&mut planner, &frames, lag_lo, lag_hi)
        .into_iter()
        .map(|r| frame_hnr_db(r, cfg.hnr_cap_db))
        .sum();
    Ok(total / n_frames as f64)
}
