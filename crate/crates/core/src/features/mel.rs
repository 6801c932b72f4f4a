use super::{DspConfig, FeatureError};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters over the one-sided spectrum bins.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    weights: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
    edges_hz: Vec<f64>,
}

impl FilterBank {
    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn filter(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// The `n_filters + 2` boundary frequencies, equally spaced in mel.
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    /// Filter energies `W · power`.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Builds `cfg.n_mel_filters` triangles whose edges are equally spaced on
/// the mel scale between `fmin` and `fmax`. Each filter is rescaled so its
/// largest weight is exactly 1; a filter too narrow to cover any bin gets a
/// single unit weight at the bin nearest its centre.
pub fn mel_filterbank(cfg: &DspConfig, sample_rate_hz: u32) -> Result<FilterBank, FeatureError> {
    let nyquist = f64::from(sample_rate_hz) / 2.0;
    let fmin = cfg.fmin_hz;
    let fmax = cfg.fmax_for(sample_rate_hz);
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(FeatureError::InvalidFrequencyRange {
            fmin,
            fmax,
            nyquist,
        });
    }
    if cfg.n_mel_filters == 0 {
        return Err(FeatureError::InvalidConfig(
            "need at least one mel filter".into(),
        ));
    }
    let n_fft = cfg.n_fft();
    let n_bins = n_fft / 2 + 1;
    let bin_hz = f64::from(sample_rate_hz) / n_fft as f64;

    let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let step = (mel_hi - mel_lo) / (cfg.n_mel_filters + 1) as f64;
    let edges_hz: Vec<f64> = (0..cfg.n_mel_filters + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect();

    let mut weights = Vec::with_capacity(cfg.n_mel_filters);
    for m in 0..cfg.n_mel_filters {
        let (lo, center, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        let mut row: Vec<f64> = (0..n_bins)
            .map(|k| {
                let f = k as f64 * bin_hz;
                if f <= lo || f >= hi {
                    0.0
                } else if f <= center {
                    (f - lo) / (center - lo)
                } else {
                    (hi - f) / (hi - center)
                }
            })
            .collect();
        let peak = row.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            row.iter_mut().for_each(|w| *w /= peak);
        } else {
            let k = ((center / bin_hz).round() as usize).min(n_bins - 1);
            row[k] = 1.0;
        }
        weights.push(row);
    }
    Ok(FilterBank {
        weights,
        centers_hz: edges_hz[1..=cfg.n_mel_filters].to_vec(),
        edges_hz,
    })
}
