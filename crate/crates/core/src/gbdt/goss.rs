use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::validate_goss;
use super::GbdtError;

/// Rows selected for one boosting round with their gradient/hessian
/// multipliers; `indices` is ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    pub indices: Vec<usize>,
    pub multipliers: Vec<f64>,
}

fn ceil_fraction(frac: f64, n: usize) -> usize {
    // guard against 0.2 * 10 = 2.0000000000000004 style products
    ((frac * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Gradient-based one-side sampling: keep the `ceil(a·n)` rows with the
/// largest `|g|`, draw `ceil(b·n)` of the rest uniformly and up-weight them
/// by `(1 − a) / b`.
pub fn goss_sample(g: &[f64], a: f64, b: f64, seed: u64) -> Result<GossSample, GbdtError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    goss_sample_with(g, a, b, &mut rng)
}

pub(crate) fn goss_sample_with(
    g: &[f64],
    a: f64,
    b: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GossSample, GbdtError> {
    validate_goss(a, b)?;
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| g[j].abs().total_cmp(&g[i].abs()).then(i.cmp(&j)));
    let n_top = ceil_fraction(a, n).min(n);
    let rest = &order[n_top..];
    let n_rand = ceil_fraction(b, n).min(rest.len());

    let mut weight = vec![0.0; n];
    for &i in &order[..n_top] {
        weight[i] = 1.0;
    }
    if n_rand > 0 {
        let boost = (1.0 - a) / b;
        for k in sample(rng, rest.len(), n_rand) {
            weight[rest[k]] = boost;
        }
    }
    let indices: Vec<usize> = (0..n).filter(|&i| weight[i] > 0.0).collect();
    let multipliers = indices.iter().map(|&i| weight[i]).collect();
    Ok(GossSample {
        indices,
        multipliers,
    })
}
