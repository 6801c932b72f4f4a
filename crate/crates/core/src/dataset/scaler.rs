use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};
use crate::features::N_FEATURES;

/// Below this a column is treated as constant and its scale set to 1.
const STD_FLOOR: f64 = 1e-12;

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn fit_rows<'a, I>(rows: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = &'a [f64; N_FEATURES]>,
    {
        let rows: Vec<&[f64; N_FEATURES]> = rows.into_iter().collect();
        if rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; N_FEATURES];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; N_FEATURES];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < STD_FLOOR {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, v: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for i in 0..N_FEATURES {
            out[i] = (v[i] - self.mean[i]) / self.std[i];
        }
        out
    }

    pub fn invert(&self, v: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for i in 0..N_FEATURES {
            out[i] = v[i] * self.std[i] + self.mean[i];
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.mean.len() == N_FEATURES
            && self.std.len() == N_FEATURES
            && self.mean.iter().all(|m| m.is_finite())
            && self.std.iter().all(|s| s.is_finite() && *s > 0.0)
    }
}

pub fn fit_scaler(ds: &Dataset) -> Result<ScalerParams, DatasetError> {
    ScalerParams::fit_rows(ds.records().iter().map(|r| r.features.as_array()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<[f64; N_FEATURES]> {
        (0..10)
            .map(|i| {
                let mut r = [7.0; N_FEATURES];
                r[0] = i as f64;
                r[1] = (i * i) as f64 - 3.5;
                r
            })
            .collect()
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let rows = rows();
        let p = ScalerParams::fit_rows(&rows).unwrap();
        assert_eq!(p.std[5], 1.0);
        for r in &rows {
            assert_eq!(p.apply(r)[5], 0.0);
        }
    }

    #[test]
    fn standardized_columns_have_unit_variance() {
        let rows = rows();
        let p = ScalerParams::fit_rows(&rows).unwrap();
        for col in 0..2 {
            let z: Vec<f64> = rows.iter().map(|r| p.apply(r)[col]).collect();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invert_roundtrip() {
        let rows = rows();
        let p = ScalerParams::fit_rows(&rows).unwrap();
        for r in &rows {
            let back = p.invert(&p.apply(r));
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_is_an_error() {
        let empty: Vec<[f64; N_FEATURES]> = Vec::new();
        assert_eq!(
            ScalerParams::fit_rows(&empty),
            Err(DatasetError::EmptyDataset)
        );
    }
}
