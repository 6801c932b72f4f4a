use ndarray::Array2;

/// Bin layout of one feature: inclusive upper bounds plus the smallest and
/// largest training value that fell in each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBins {
    pub upper: Vec<f64>,
    pub min_value: Vec<f64>,
    pub max_value: Vec<f64>,
}

impl FeatureBins {
    pub fn n_bins(&self) -> usize {
        self.upper.len()
    }

    /// First bin whose upper bound is `>= x`; values past the last bound
    /// land in the last bin.
    pub fn bin_of(&self, x: f64) -> u32 {
        let b = self.upper.partition_point(|&u| u < x);
        b.min(self.upper.len() - 1) as u32
    }
}

/// Column-major bin indices with the per-feature layouts that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedFeatures {
    pub columns: Vec<Vec<u32>>,
    pub bins: Vec<FeatureBins>,
}

impl BinnedFeatures {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

fn upper_bounds(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let mut distinct = sorted.to_vec();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct;
    }
    let n = sorted.len();
    let mut upper: Vec<f64> = (1..max_bins)
        .map(|q| sorted[(q * n).div_ceil(max_bins) - 1])
        .collect();
    upper.push(sorted[n - 1]);
    upper.dedup();
    upper
}

/// Quantile binning of every column. Columns with at most `max_bins`
/// distinct values get one bin per distinct value.
pub fn bin_features(x: &Array2<f64>, max_bins: usize) -> BinnedFeatures {
    let max_bins = max_bins.max(2);
    let mut columns = Vec::with_capacity(x.ncols());
    let mut bins = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let mut sorted: Vec<f64> = col.to_vec();
        sorted.sort_by(f64::total_cmp);
        let upper = if sorted.is_empty() {
            vec![0.0]
        } else {
            upper_bounds(&sorted, max_bins)
        };
        let mut fb = FeatureBins {
            min_value: vec![f64::INFINITY; upper.len()],
            max_value: vec![f64::NEG_INFINITY; upper.len()],
            upper,
        };
        let idx: Vec<u32> = col.iter().map(|&v| fb.bin_of(v)).collect();
        for (&b, &v) in idx.iter().zip(col.iter()) {
            let b = b as usize;
            fb.min_value[b] = fb.min_value[b].min(v);
            fb.max_value[b] = fb.max_value[b].max(v);
        }
        columns.push(idx);
        bins.push(fb);
    }
    BinnedFeatures { columns, bins }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_distinct_values_three_bins() {
        let x = Array2::from_shape_vec((6, 1), vec![5.0, 1.0, 3.0, 1.0, 5.0, 3.0]).unwrap();
        let b = bin_features(&x, 255);
        assert_eq!(b.bins[0].n_bins(), 3);
        assert_eq!(b.columns[0], vec![2, 0, 1, 0, 2, 1]);
        assert_eq!(b.bins[0].min_value, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn caps_bin_count() {
        let x = Array2::from_shape_fn((1000, 1), |(i, _)| (i as f64).sqrt());
        let b = bin_features(&x, 16);
        assert!(b.bins[0].n_bins() <= 16);
        let counts = (0..b.bins[0].n_bins())
            .map(|k| b.columns[0].iter().filter(|&&v| v as usize == k).count())
            .collect::<Vec<_>>();
        assert!(counts.iter().all(|&c| (50..=80).contains(&c)), "{counts:?}");
    }
}
