use super::TreeParams;

/// Regularized second-order split gain:
/// `½·[GL²/(HL+λ) + GR²/(HR+λ) − (GL+GR)²/(HL+HR+λ)] − γ`.
///
/// A zero denominator contributes zero to its term.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let term = |g: f64, h: f64| {
        let d = h + lambda;
        if d > 0.0 {
            g * g / d
        } else {
            0.0
        }
    };
    0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr)) - gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    pub gain: f64,
    pub left_count: usize,
}

/// Whether `gain` beats `best` by more than floating-point noise. Gains
/// within a relative 1e-12 count as ties, which keep the earlier candidate
/// (lower feature index, then lower threshold).
pub(crate) fn improves(gain: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) => gain - b > 1e-12 * b.abs(),
    }
}

/// A threshold strictly above `lo` and at most `hi`, as close to the
/// midpoint as floating point allows. Rows with `x < threshold` go left.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Scans `(value, g, h)` triples already sorted by value and returns the
/// best positive-gain threshold. Ties keep the lowest threshold.
pub(crate) fn scan_sorted(
    sorted: &[(f64, f64, f64)],
    g_total: f64,
    h_total: f64,
    lambda: f64,
    gamma: f64,
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = sorted.len();
    let mut best: Option<SplitCandidate> = None;
    let (mut gl, mut hl) = (0.0, 0.0);
    for i in 0..n.saturating_sub(1) {
        let (v, g, h) = sorted[i];
        gl += g;
        hl += h;
        let left = i + 1;
        if left < min_samples_leaf || n - left < min_samples_leaf {
            continue;
        }
        let next = sorted[i + 1].0;
        if !(v < next) {
            continue;
        }
        let gain = split_gain(gl, hl, g_total - gl, h_total - hl, lambda, gamma);
        if gain > 0.0 && improves(gain, best.map(|b| b.gain)) {
            best = Some(SplitCandidate {
                threshold: midpoint(v, next),
                gain,
                left_count: left,
            });
        }
    }
    best
}

/// Best exact threshold for a single column.
pub fn best_split_exact(
    values: &[f64],
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
) -> Option<SplitCandidate> {
    assert_eq!(values.len(), g.len());
    assert_eq!(values.len(), h.len());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<(f64, f64, f64)> = idx.iter().map(|&i| (values[i], g[i], h[i])).collect();
    let g_total: f64 = g.iter().sum();
    let h_total: f64 = h.iter().sum();
    scan_sorted(
        &sorted,
        g_total,
        h_total,
        params.lambda,
        params.gamma,
        params.min_samples_leaf,
    )
}
