use super::BinnedFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleMember {
    pub feature: usize,
    /// Encoded value = `offset + bin` for the member's non-zero bins.
    pub offset: u32,
    pub n_bins: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub members: Vec<BundleMember>,
    /// Number of encoded values, including the shared zero.
    pub n_values: u32,
}

impl Bundle {
    /// Member owning an encoded non-zero value.
    pub fn member_of(&self, value: u32) -> Option<&BundleMember> {
        self.members
            .iter()
            .find(|m| value > m.offset && value < m.offset + m.n_bins)
    }
}

/// Features merged into bundles; bin 0 of every feature is its zero bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundling {
    pub bundles: Vec<Bundle>,
    /// Column-major encoded values, one column per bundle.
    pub columns: Vec<Vec<u32>>,
    pub n_features: usize,
}

impl FeatureBundling {
    /// Each feature in its own bundle.
    pub fn identity(binned: &BinnedFeatures) -> Self {
        let bundles = binned
            .bins
            .iter()
            .enumerate()
            .map(|(f, b)| Bundle {
                members: vec![BundleMember {
                    feature: f,
                    offset: 0,
                    n_bins: b.n_bins() as u32,
                }],
                n_values: b.n_bins() as u32,
            })
            .collect();
        Self {
            bundles,
            columns: binned.columns.clone(),
            n_features: binned.n_features(),
        }
    }

    /// Recovers per-feature bin columns. Exact whenever no bundle had a
    /// conflicting row.
    pub fn decode(&self) -> Vec<Vec<u32>> {
        let n_rows = self.columns.first().map_or(0, Vec::len);
        let mut out = vec![vec![0u32; n_rows]; self.n_features];
        for (bundle, col) in self.bundles.iter().zip(&self.columns) {
            for (row, &v) in col.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                if let Some(m) = bundle.member_of(v) {
                    out[m.feature][row] = v - m.offset;
                }
            }
        }
        out
    }
}

/// Greedy exclusive feature bundling.
///
/// Features are visited by descending non-zero count and placed in the first
/// bundle where the number of rows already non-zero in that bundle is at
/// most `max_conflict · n`. On a conflicting row the earlier member keeps
/// its value.
pub fn efb_bundle(binned: &BinnedFeatures, max_conflict: f64) -> FeatureBundling {
    let n_rows = binned.n_rows();
    let budget = (max_conflict.clamp(0.0, 1.0) * n_rows as f64).floor() as usize;
    let nonzero: Vec<usize> = binned
        .columns
        .iter()
        .map(|c| c.iter().filter(|&&b| b != 0).count())
        .collect();
    let mut order: Vec<usize> = (0..binned.n_features()).collect();
    order.sort_by(|&a, &b| nonzero[b].cmp(&nonzero[a]).then(a.cmp(&b)));

    let mut bundles: Vec<Bundle> = Vec::new();
    let mut columns: Vec<Vec<u32>> = Vec::new();
    for f in order {
        let col = &binned.columns[f];
        let n_bins = binned.bins[f].n_bins() as u32;
        let target = columns.iter().position(|enc| {
            let conflicts = enc
                .iter()
                .zip(col)
                .filter(|(&e, &b)| e != 0 && b != 0)
                .count();
            conflicts <= budget
        });
        let k = match target {
            Some(k) => k,
            None => {
                bundles.push(Bundle {
                    members: Vec::new(),
                    n_values: 1,
                });
                columns.push(vec![0; n_rows]);
                bundles.len() - 1
            }
        };
        let offset = bundles[k].n_values - 1;
        bundles[k].members.push(BundleMember {
            feature: f,
            offset,
            n_bins,
        });
        bundles[k].n_values += n_bins.saturating_sub(1);
        for (e, &b) in columns[k].iter_mut().zip(col) {
            if b != 0 && *e == 0 {
                *e = offset + b;
            }
        }
    }
    FeatureBundling {
        bundles,
        columns,
        n_features: binned.n_features(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::bin_features;
    use ndarray::Array2;

    #[test]
    fn one_hot_columns_share_a_bundle() {
        let x = Array2::from_shape_fn((12, 4), |(r, c)| if r % 4 == c { 1.0 } else { 0.0 });
        let binned = bin_features(&x, 255);
        let b = efb_bundle(&binned, 0.0);
        assert_eq!(b.bundles.len(), 1);
        assert_eq!(b.decode(), binned.columns);
    }

    #[test]
    fn dense_columns_stay_apart() {
        let x = Array2::from_shape_fn((10, 3), |(r, c)| (r * (c + 1)) as f64 + 1.0);
        let binned = bin_features(&x, 255);
        // row 0 is the minimum in every column, so bin 0; all others non-zero
        let b = efb_bundle(&binned, 0.0);
        assert_eq!(b.bundles.len(), 3);
        assert_eq!(b.decode(), binned.columns);
    }
}
