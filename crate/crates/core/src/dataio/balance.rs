use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{ClassLabel, LabeledSample};

/// Oversamples minority classes up to the majority count.
///
/// Each synthetic vector is a convex combination of every real vector of its
/// class, with a fresh weight vector drawn uniform on `[0, 1]` and normalized
/// to sum 1. Real samples are kept in their original order and synthetic
/// ones are appended class by class.
pub fn balance_dataset(samples: &[LabeledSample], seed: u64) -> Result<Vec<LabeledSample>> {
    let dims = samples.first().map(|s| s.features.len()).unwrap_or(0);
    if let Some(bad) = samples.iter().find(|s| s.features.len() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: bad.features.len(),
        });
    }
    let real: Vec<Vec<&LabeledSample>> = ClassLabel::ALL
        .iter()
        .map(|&l| {
            samples
                .iter()
                .filter(|s| s.label == l && !s.synthetic)
                .collect()
        })
        .collect();
    for (label, members) in ClassLabel::ALL.iter().zip(&real) {
        if members.is_empty() {
            return Err(Error::Dataset(format!("class {label} has no real samples")));
        }
    }
    let target = real.iter().map(Vec::len).max().unwrap_or(0);
    for (label, members) in ClassLabel::ALL.iter().zip(&real) {
        if members.len() < target && members.len() < 2 {
            return Err(Error::Dataset(format!(
                "class {label} needs synthesis but has only {} real sample",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledSample> = samples.to_vec();
    for (label, members) in ClassLabel::ALL.iter().zip(&real) {
        for _ in members.len()..target {
            let weights: Vec<f64> = (0..members.len()).map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            // all-zero draws have probability ~0; fall back to the centroid
            let weights: Vec<f64> = if total > 0.0 {
                weights.iter().map(|w| w / total).collect()
            } else {
                vec![1.0 / members.len() as f64; members.len()]
            };
            let mut features = vec![0.0; dims];
            for (w, s) in weights.iter().zip(members) {
                for (acc, v) in features.iter_mut().zip(&s.features) {
                    *acc += w * v;
                }
            }
            out.push(LabeledSample {
                features,
                label: *label,
                synthetic: true,
            });
        }
    }
    Ok(out)
}
