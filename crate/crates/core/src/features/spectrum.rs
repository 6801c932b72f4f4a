//! FFT-backed spectral helpers shared by the cepstral, HNR and GNE stages.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::FeatureError;

/// One-sided power spectrum `|X_k|^2`, `k = 0..=n/2`, of a power-of-two
/// length frame.
pub fn power_spectrum(frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
    let n = frame.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(FeatureError::NonPowerOfTwoLength(n));
    }
    let mut planner = FftPlanner::new();
    Ok(power_spectrum_with(&mut planner, frame))
}

pub(crate) fn power_spectrum_with(planner: &mut FftPlanner<f64>, frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}

pub(crate) fn forward(planner: &mut FftPlanner<f64>, signal: &[f64], len: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (b, &x) in buf.iter_mut().zip(signal) {
        b.re = x;
    }
    planner.plan_fft_forward(len).process(&mut buf);
    buf
}

/// Unnormalized inverse transform in place, followed by division by the length.
pub(crate) fn inverse(planner: &mut FftPlanner<f64>, buf: &mut [Complex64]) {
    let len = buf.len();
    planner.plan_fft_inverse(len).process(buf);
    let scale = 1.0 / len as f64;
    for b in buf.iter_mut() {
        *b *= scale;
    }
}

/// Linear convolution of `signal` with an odd-length, zero-phase `kernel`,
/// trimmed to the signal length (centre-aligned).
///
/// Overlap-add with short blocks, so the transform size follows the kernel
/// rather than the signal.
pub(crate) fn convolve_same(
    planner: &mut FftPlanner<f64>,
    signal: &[f64],
    kernel: &[f64],
) -> Vec<f64> {
    debug_assert!(kernel.len() % 2 == 1);
    let len = (4 * kernel.len()).next_power_of_two().max(1024);
    let block = len - kernel.len() + 1;
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut scratch = vec![
        Complex64::ZERO;
        fwd.get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len())
    ];
    let mut k = vec![Complex64::ZERO; len];
    for (c, &x) in k.iter_mut().zip(kernel) {
        c.re = x;
    }
    fwd.process_with_scratch(&mut k, &mut scratch);

    let mut full = vec![0.0; signal.len() + kernel.len() - 1];
    let mut buf = vec![Complex64::ZERO; len];
    let scale = 1.0 / len as f64;
    for (b, chunk) in signal.chunks(block).enumerate() {
        buf.fill(Complex64::ZERO);
        for (c, &x) in buf.iter_mut().zip(chunk) {
            c.re = x;
        }
        fwd.process_with_scratch(&mut buf, &mut scratch);
        for (c, kc) in buf.iter_mut().zip(&k) {
            *c *= kc;
        }
        inv.process_with_scratch(&mut buf, &mut scratch);
        let start = b * block;
        let n_out = chunk.len() + kernel.len() - 1;
        for (o, c) in full[start..start + n_out].iter_mut().zip(&buf) {
            *o += c.re * scale;
        }
    }
    let delay = kernel.len() / 2;
    full.drain(..delay);
    full.truncate(signal.len());
    full
}

/// Band-limited resampling by spectral truncation or zero padding.
pub(crate) fn resample(
    planner: &mut FftPlanner<f64>,
    signal: &[f64],
    from_hz: u32,
    to_hz: u32,
) -> Vec<f64> {
    if from_hz == to_hz {
        return signal.to_vec();
    }
    let n = signal.len();
    let m =
        ((n as u128 * u128::from(to_hz) + u128::from(from_hz) / 2) / u128::from(from_hz)) as usize;
    let m = m.max(1);
    let spec = forward(planner, signal, n);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    // Positive frequencies strictly below both Nyquist limits, mirrored.
    let keep = (n.min(m) - 1) / 2;
    out[0] = spec[0];
    for k in 1..=keep {
        out[k] = spec[k];
        out[m - k] = spec[n - k];
    }
    inverse(planner, &mut out);
    let scale = m as f64 / n as f64;
    out.iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_is_flat() {
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        assert_eq!(power_spectrum(&x).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn zeros_are_zero() {
        assert_eq!(power_spectrum(&[0.0; 16]).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert_eq!(
            power_spectrum(&[0.0; 12]),
            Err(FeatureError::NonPowerOfTwoLength(12))
        );
    }

    #[test]
    fn convolution_with_delta_is_identity() {
        let mut p = FftPlanner::new();
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.3).sin()).collect();
        let y = convolve_same(&mut p, &x, &[0.0, 0.0, 1.0, 0.0, 0.0]);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blocked_convolution_matches_direct_sum() {
        let mut p = FftPlanner::new();
        let x: Vec<f64> = (0..5000)
            .map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0)
            .collect();
        let k: Vec<f64> = (0..63)
            .map(|i| ((i * 31) % 17) as f64 / 17.0 - 0.4)
            .collect();
        let y = convolve_same(&mut p, &x, &k);
        assert_eq!(y.len(), x.len());
        let half = k.len() / 2;
        for (n, got) in y.iter().enumerate() {
            let want: f64 = (0..k.len())
                .filter_map(|j| {
                    (n + half)
                        .checked_sub(j)
                        .and_then(|i| x.get(i))
                        .map(|v| v * k[j])
                })
                .sum();
            assert!((got - want).abs() < 1e-10, "{n}: {got} vs {want}");
        }
    }

    #[test]
    fn resampling_keeps_a_low_tone() {
        let mut p = FftPlanner::new();
        let from = 44_100;
        let x: Vec<f64> = (0..44_100)
            .map(|i| (2.0 * std::f64::consts::PI * 200.0 * i as f64 / from as f64).sin())
            .collect();
        let y = resample(&mut p, &x, from, 10_000);
        assert_eq!(y.len(), 10_000);
        for (i, v) in y.iter().enumerate().step_by(97) {
            let expect = (2.0 * std::f64::consts::PI * 200.0 * i as f64 / 10_000.0).sin();
            assert!((v - expect).abs() < 1e-6, "{i}: {v} vs {expect}");
        }
    }
}
