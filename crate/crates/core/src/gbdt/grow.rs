//! Greedy top-down tree growth over three split finders: exact presorted
//! scans, feature histograms (optionally bundled) and Gini impurity.

use ndarray::Array2;

use super::efb::{efb_bundle, FeatureBundling};
use super::split::{improves, midpoint, scan_sorted, split_gain};
use super::tree::{DecisionTree, Node};
use super::{bin_features, BinnedFeatures, TreeParams};

/// A chosen split with its gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitInfo {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Per-row statistics for one tree. Splits are scored with `h_split` and
/// `lambda_split`; leaves use `h_leaf` and `lambda_leaf`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GradStats<'a> {
    pub g: &'a [f64],
    pub h_split: &'a [f64],
    pub h_leaf: &'a [f64],
    pub lambda_split: f64,
    pub lambda_leaf: f64,
    pub gamma: f64,
}

impl GradStats<'_> {
    fn leaf_weight(&self, rows: &[usize]) -> f64 {
        let g: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.h_leaf[r]).sum();
        let den = h + self.lambda_leaf;
        if den > 0.0 {
            -g / den
        } else {
            0.0
        }
    }
}

pub(crate) trait Grower {
    type Node;
    type Split;

    fn count(&self, node: &Self::Node) -> usize;
    fn best_split(&self, node: &Self::Node) -> Option<Self::Split>;
    fn info(split: &Self::Split) -> SplitInfo;
    fn partition(&self, node: Self::Node, split: &Self::Split) -> (Self::Node, Self::Node);
    fn leaf_value(&self, node: &Self::Node) -> f64;
}

pub(crate) fn grow<G: Grower>(
    grower: &G,
    root: G::Node,
    max_depth: usize,
    min_samples_leaf: usize,
) -> DecisionTree {
    fn rec<G: Grower>(
        grower: &G,
        node: G::Node,
        depth: usize,
        max_depth: usize,
        min_leaf: usize,
        out: &mut Vec<Node>,
    ) -> usize {
        let id = out.len();
        out.push(Node::Leaf {
            leaf: grower.leaf_value(&node),
        });
        if depth >= max_depth || grower.count(&node) < 2 * min_leaf {
            return id;
        }
        let Some(split) = grower.best_split(&node) else {
            return id;
        };
        let info = G::info(&split);
        let (l, r) = grower.partition(node, &split);
        let left = rec(grower, l, depth + 1, max_depth, min_leaf, out);
        let right = rec(grower, r, depth + 1, max_depth, min_leaf, out);
        out[id] = Node::Split {
            feature: info.feature,
            threshold: info.threshold,
            left,
            right,
        };
        id
    }
    let mut nodes = Vec::new();
    rec(
        grower,
        root,
        0,
        max_depth,
        min_samples_leaf.max(1),
        &mut nodes,
    );
    DecisionTree { nodes }
}

pub(crate) fn columns_of(x: &Array2<f64>) -> Vec<Vec<f64>> {
    x.columns().into_iter().map(|c| c.to_vec()).collect()
}

fn split_left_mask(n: usize, rows: &[usize], go_left: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &r in rows {
        mask[r] = go_left(r);
    }
    mask
}

// ---------------------------------------------------------------------------
// Exact presorted splits.

pub(crate) struct ExactGrower<'a> {
    pub cols: &'a [Vec<f64>],
    pub features: Vec<usize>,
    pub stats: GradStats<'a>,
    pub min_samples_leaf: usize,
}

pub(crate) struct ExactNode {
    rows: Vec<usize>,
    /// Row lists sorted by value, one per entry of `features`.
    sorted: Vec<Vec<usize>>,
}

impl<'a> ExactGrower<'a> {
    pub fn root(&self, rows: Vec<usize>) -> ExactNode {
        let sorted = self
            .features
            .iter()
            .map(|&f| {
                let col = &self.cols[f];
                let mut s = rows.clone();
                s.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                s
            })
            .collect();
        ExactNode { rows, sorted }
    }
}

impl Grower for ExactGrower<'_> {
    type Node = ExactNode;
    type Split = SplitInfo;

    fn count(&self, node: &ExactNode) -> usize {
        node.rows.len()
    }

    fn best_split(&self, node: &ExactNode) -> Option<SplitInfo> {
        let s = &self.stats;
        let g_total: f64 = node.rows.iter().map(|&r| s.g[r]).sum();
        let h_total: f64 = node.rows.iter().map(|&r| s.h_split[r]).sum();
        let mut best: Option<SplitInfo> = None;
        let mut triples = Vec::with_capacity(node.rows.len());
        for (&f, order) in self.features.iter().zip(&node.sorted) {
            let col = &self.cols[f];
            triples.clear();
            triples.extend(order.iter().map(|&r| (col[r], s.g[r], s.h_split[r])));
            let cand = scan_sorted(
                &triples,
                g_total,
                h_total,
                s.lambda_split,
                s.gamma,
                self.min_samples_leaf,
            );
            if let Some(c) = cand {
                if improves(c.gain, best.map(|b| b.gain)) {
                    best = Some(SplitInfo {
                        feature: f,
                        threshold: c.threshold,
                        gain: c.gain,
                    });
                }
            }
        }
        best
    }

    fn info(split: &SplitInfo) -> SplitInfo {
        *split
    }

    fn partition(&self, node: ExactNode, split: &SplitInfo) -> (ExactNode, ExactNode) {
        let col = &self.cols[split.feature];
        let n = self.cols.first().map_or(0, Vec::len);
        let mask = split_left_mask(n, &node.rows, |r| col[r] < split.threshold);
        let (lr, rr): (Vec<usize>, Vec<usize>) = node.rows.iter().partition(|&&r| mask[r]);
        let (mut ls, mut rs) = (Vec::new(), Vec::new());
        for order in node.sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&r| mask[r]);
            ls.push(l);
            rs.push(r);
        }
        (
            ExactNode {
                rows: lr,
                sorted: ls,
            },
            ExactNode {
                rows: rr,
                sorted: rs,
            },
        )
    }

    fn leaf_value(&self, node: &ExactNode) -> f64 {
        self.stats.leaf_weight(&node.rows)
    }
}

// ---------------------------------------------------------------------------
// Histogram splits over (possibly bundled) bins.

pub(crate) struct HistGrower<'a> {
    pub binned: &'a BinnedFeatures,
    pub bundling: &'a FeatureBundling,
    /// Per feature: (bundle index, member offset).
    pub location: Vec<(usize, u32)>,
    pub features: Vec<usize>,
    /// Sampling-weighted gradients and hessians; zero for unsampled rows.
    pub g: &'a [f64],
    pub h: &'a [f64],
    pub lambda: f64,
    pub gamma: f64,
    pub min_samples_leaf: usize,
}

pub(crate) struct HistSplit {
    info: SplitInfo,
    /// Rows whose bin is at most this value go left.
    last_left_bin: u32,
}

#[derive(Default, Clone)]
struct Hist {
    g: Vec<f64>,
    h: Vec<f64>,
    count: Vec<usize>,
}

impl<'a> HistGrower<'a> {
    pub fn locate(bundling: &FeatureBundling) -> Vec<(usize, u32)> {
        let mut loc = vec![(0, 0); bundling.n_features];
        for (k, b) in bundling.bundles.iter().enumerate() {
            for m in &b.members {
                loc[m.feature] = (k, m.offset);
            }
        }
        loc
    }

    fn feature_bin(&self, feature: usize, row: usize) -> u32 {
        let (k, offset) = self.location[feature];
        let v = self.bundling.columns[k][row];
        let n_bins = self.binned.bins[feature].n_bins() as u32;
        if v > offset && v < offset + n_bins {
            v - offset
        } else {
            0
        }
    }
}

impl Grower for HistGrower<'_> {
    type Node = Vec<usize>;
    type Split = HistSplit;

    fn count(&self, rows: &Vec<usize>) -> usize {
        rows.len()
    }

    fn best_split(&self, rows: &Vec<usize>) -> Option<HistSplit> {
        let g_total: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let h_total: f64 = rows.iter().map(|&r| self.h[r]).sum();
        let n = rows.len();

        let mut hists: Vec<Option<Hist>> = vec![None; self.bundling.bundles.len()];
        for &f in &self.features {
            let k = self.location[f].0;
            if hists[k].is_some() {
                continue;
            }
            let size = self.bundling.bundles[k].n_values as usize;
            let mut hist = Hist {
                g: vec![0.0; size],
                h: vec![0.0; size],
                count: vec![0; size],
            };
            let col = &self.bundling.columns[k];
            for &r in rows {
                let v = col[r] as usize;
                if v != 0 {
                    hist.g[v] += self.g[r];
                    hist.h[v] += self.h[r];
                    hist.count[v] += 1;
                }
            }
            hists[k] = Some(hist);
        }

        let mut best: Option<HistSplit> = None;
        for &f in &self.features {
            let (k, offset) = self.location[f];
            let hist = hists[k].as_ref().expect("histogram built above");
            let bins = &self.binned.bins[f];
            let nb = bins.n_bins();
            let mut fg = vec![0.0; nb];
            let mut fh = vec![0.0; nb];
            let mut fc = vec![0usize; nb];
            for b in 1..nb {
                let v = offset as usize + b;
                fg[b] = hist.g[v];
                fh[b] = hist.h[v];
                fc[b] = hist.count[v];
            }
            fg[0] = g_total - fg[1..].iter().sum::<f64>();
            fh[0] = h_total - fh[1..].iter().sum::<f64>();
            fc[0] = n - fc[1..].iter().sum::<usize>();

            let nonempty: Vec<usize> = (0..nb).filter(|&b| fc[b] > 0).collect();
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for w in 0..nonempty.len().saturating_sub(1) {
                let b = nonempty[w];
                gl += fg[b];
                hl += fh[b];
                nl += fc[b];
                if nl < self.min_samples_leaf || n - nl < self.min_samples_leaf {
                    continue;
                }
                let gain = split_gain(gl, hl, g_total - gl, h_total - hl, self.lambda, self.gamma);
                if gain > 0.0 && improves(gain, best.as_ref().map(|s| s.info.gain)) {
                    let next = nonempty[w + 1];
                    best = Some(HistSplit {
                        info: SplitInfo {
                            feature: f,
                            threshold: midpoint(bins.max_value[b], bins.min_value[next]),
                            gain,
                        },
                        last_left_bin: b as u32,
                    });
                }
            }
        }
        best
    }

    fn info(split: &HistSplit) -> SplitInfo {
        split.info
    }

    fn partition(&self, rows: Vec<usize>, split: &HistSplit) -> (Vec<usize>, Vec<usize>) {
        rows.into_iter()
            .partition(|&r| self.feature_bin(split.info.feature, r) <= split.last_left_bin)
    }

    fn leaf_value(&self, rows: &Vec<usize>) -> f64 {
        let g: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.h[r]).sum();
        let den = h + self.lambda;
        if den > 0.0 {
            -g / den
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// Gini classification splits for bagging.

pub(crate) struct GiniGrower<'a> {
    pub cols: &'a [Vec<f64>],
    pub y: &'a [u8],
    pub min_samples_leaf: usize,
}

/// `n · gini` for a node with `pos` positives out of `n`.
fn weighted_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (p, q) = (pos as f64, (n - pos) as f64);
    n as f64 - (p * p + q * q) / n as f64
}

impl Grower for GiniGrower<'_> {
    /// Row multiset (bootstrap duplicates allowed).
    type Node = Vec<usize>;
    type Split = SplitInfo;

    fn count(&self, rows: &Vec<usize>) -> usize {
        rows.len()
    }

    fn best_split(&self, rows: &Vec<usize>) -> Option<SplitInfo> {
        let n = rows.len();
        let pos_total = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let parent = weighted_gini(pos_total, n);
        if parent <= 0.0 {
            return None;
        }
        let mut best: Option<SplitInfo> = None;
        let mut order = rows.clone();
        for (f, col) in self.cols.iter().enumerate() {
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut pos_left = 0;
            for i in 0..n - 1 {
                pos_left += usize::from(self.y[order[i]] == 1);
                let left = i + 1;
                if left < self.min_samples_leaf || n - left < self.min_samples_leaf {
                    continue;
                }
                let (v, next) = (col[order[i]], col[order[i + 1]]);
                if !(v < next) {
                    continue;
                }
                let gain = parent
                    - weighted_gini(pos_left, left)
                    - weighted_gini(pos_total - pos_left, n - left);
                if gain > 1e-12 && improves(gain, best.map(|b| b.gain)) {
                    best = Some(SplitInfo {
                        feature: f,
                        threshold: midpoint(v, next),
                        gain,
                    });
                }
            }
        }
        best
    }

    fn info(split: &SplitInfo) -> SplitInfo {
        *split
    }

    fn partition(&self, rows: Vec<usize>, split: &SplitInfo) -> (Vec<usize>, Vec<usize>) {
        let col = &self.cols[split.feature];
        rows.into_iter().partition(|&r| col[r] < split.threshold)
    }

    fn leaf_value(&self, rows: &Vec<usize>) -> f64 {
        if rows.is_empty() {
            return 0.5;
        }
        rows.iter().filter(|&&r| self.y[r] == 1).count() as f64 / rows.len() as f64
    }
}

// ---------------------------------------------------------------------------
// Root-split entry points.

/// Best exact split across all columns of `x`, scored with second-order
/// statistics and the `lambda`/`gamma`/`min_samples_leaf` of `params`.
/// Ties resolve to the lowest feature, then the lowest threshold.
pub fn best_split_over_features(
    x: &Array2<f64>,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
) -> Option<SplitInfo> {
    let cols = columns_of(x);
    let grower = ExactGrower {
        cols: &cols,
        features: (0..x.ncols()).collect(),
        stats: GradStats {
            g,
            h_split: h,
            h_leaf: h,
            lambda_split: params.lambda,
            lambda_leaf: params.lambda,
            gamma: params.gamma,
        },
        min_samples_leaf: params.min_samples_leaf,
    };
    let root = grower.root((0..x.nrows()).collect());
    grower.best_split(&root)
}

/// Histogram counterpart of [`best_split_over_features`]: bins with
/// `params.max_bins` and bundles when `params.efb_enabled`.
pub fn best_split_histogram(
    x: &Array2<f64>,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
) -> Option<SplitInfo> {
    let binned = bin_features(x, params.max_bins);
    let bundling = if params.efb_enabled {
        efb_bundle(&binned, params.efb_max_conflict)
    } else {
        FeatureBundling::identity(&binned)
    };
    let grower = HistGrower {
        binned: &binned,
        location: HistGrower::locate(&bundling),
        bundling: &bundling,
        features: (0..x.ncols()).collect(),
        g,
        h,
        lambda: params.lambda,
        gamma: params.gamma,
        min_samples_leaf: params.min_samples_leaf,
    };
    grower.best_split(&(0..x.nrows()).collect()).map(|s| s.info)
}
