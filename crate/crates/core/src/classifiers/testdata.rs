use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataio::ClassLabel;

/// Three unit-variance Gaussian classes whose centres are `separation`
/// apart along distinct axes.
pub fn blobs(per_class: usize, dims: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..per_class * 3 {
        let class = i % 3;
        let row = (0..dims)
            .map(|d| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                noise + if d == class { separation } else { 0.0 }
            })
            .collect();
        x.push(row);
        y.push(ClassLabel::from_index(class).unwrap());
    }
    (x, y)
}

pub fn xor() -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    (
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        vec![ClassLabel::Normal, ClassLabel::Benign, ClassLabel::Benign, ClassLabel::Normal],
    )
}

/// Scales every feature of `x` into [0, 1] using its own range.
pub fn unit_scale(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = crate::features::Normalization::fit(x).unwrap();
    n.apply_all(x).unwrap()
}
