use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Singular values below `PINV_RCOND * sigma_max` are treated as zero.
pub const PINV_RCOND: f64 = 1e-12;

/// Moore-Penrose pseudoinverse by singular value decomposition.
pub fn pinv(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    if a.is_empty() {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let m = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let sigma_max = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = PINV_RCOND * sigma_max;
    // V diag(1/s) U^T over the retained singular values
    let mut v = svd.V().to_owned();
    for k in 0..s.nrows() {
        let scale = if s[k] > cutoff && s[k] > 0.0 { 1.0 / s[k] } else { 0.0 };
        for i in 0..cols {
            v[(i, k)] *= scale;
        }
    }
    let p = v * svd.U().transpose();
    Ok(DMatrix::from_fn(cols, rows, |i, j| p[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn penrose_residuals(a: &DMatrix<f64>, p: &DMatrix<f64>) -> [f64; 4] {
        let ap = a * p;
        let pa = p * a;
        [
            (&ap * a - a).amax(),
            (&pa * p - p).amax(),
            (&ap - ap.transpose()).amax(),
            (&pa - pa.transpose()).amax(),
        ]
    }

    #[test]
    fn identity_is_its_own_pseudoinverse() {
        let i = DMatrix::<f64>::identity(6, 6);
        assert!((pinv(&i).unwrap() - &i).amax() < 1e-15);
    }

    #[test]
    fn penrose_conditions_hold() {
        for seed in 0..10 {
            for (r, c) in [(20, 5), (5, 20), (7, 7)] {
                let a = random(r, c, seed);
                let p = pinv(&a).unwrap();
                assert_eq!((p.nrows(), p.ncols()), (c, r));
                for res in penrose_residuals(&a, &p) {
                    assert!(res < 1e-8, "{r}x{c} seed {seed}: {res}");
                }
            }
        }
    }

    #[test]
    fn rank_deficient_and_zero_inputs() {
        let b = random(12, 3, 4);
        // duplicate columns: rank 3 in a 12 x 6 matrix
        let a = DMatrix::from_fn(12, 6, |i, j| b[(i, j % 3)]);
        let p = pinv(&a).unwrap();
        for res in penrose_residuals(&a, &p) {
            assert!(res < 1e-8, "{res}");
        }
        let z = DMatrix::<f64>::zeros(3, 4);
        assert_eq!(pinv(&z).unwrap(), DMatrix::zeros(4, 3));
    }
}
