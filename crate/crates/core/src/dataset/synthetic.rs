use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Label, Record, REPLICATIONS};
use crate::features::{FeatureVector32, N_FEATURES};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 in (0, 1] keeps the log finite
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A seeded feature table shaped like the replicated corpus, for tests and
/// demos. Each subject has a latent centre shifted by `separation` along
/// every feature for the positive class; replications add small jitter.
pub fn synthetic_dataset(n_pos: usize, n_neg: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity((n_pos + n_neg) * REPLICATIONS);
    for s in 0..n_pos + n_neg {
        let label = Label::from_positive(s < n_pos);
        let shift = if label == Label::Parkinson {
            separation
        } else {
            0.0
        };
        let centre: [f64; N_FEATURES] = std::array::from_fn(|_| gaussian(&mut rng) + shift);
        for rep in 1..=REPLICATIONS as u8 {
            let v = centre.map(|c| c + 0.2 * gaussian(&mut rng));
            records.push(Record {
                subject_id: format!(
                    "{}{s:03}",
                    if label == Label::Parkinson {
                        "PD"
                    } else {
                        "HC"
                    }
                ),
                replication_idx: rep,
                features: FeatureVector32::new(v),
                label,
            });
        }
    }
    Dataset::new(records, true).expect("synthetic records satisfy the invariants")
}
