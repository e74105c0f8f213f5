//! Zernike radial polynomials, basis functions and moment magnitudes.
//!
//! A component is mapped onto the unit disk inscribed in its bounding
//! square: pixel centres are taken relative to the image centre, scaled by
//! `min(width, height) / 2`, with y pointing up. Pixels outside the disk are
//! ignored and each pixel contributes an area `(2 / min(width, height))^2`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Plane;

/// Largest supported radial order.
pub const MAX_ORDER: u32 = 20;

const FACTORIALS: [f64; 21] = {
    let mut t = [1.0; 21];
    let mut i = 1;
    while i < 21 {
        t[i] = t[i - 1] * i as f64;
        i += 1;
    }
    t
};

/// Radial order `n` and repetition `m` of a Zernike polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZernikeIndex {
    pub n: u32,
    pub m: i32,
}

impl ZernikeIndex {
    pub fn new(n: u32, m: i32) -> Result<Self> {
        let am = m.unsigned_abs();
        if am > n || (n - am) % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid Zernike index (n={n}, m={m}): need |m| <= n and n - |m| even"
            )));
        }
        if n > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "Zernike order {n} exceeds {MAX_ORDER}"
            )));
        }
        Ok(ZernikeIndex { n, m })
    }
}

impl fmt::Display for ZernikeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

/// The 32 indices used for every wavelet component: orders 3 to 10 with
/// nonnegative repetitions in ascending order.
pub fn standard_indices() -> Vec<ZernikeIndex> {
    (3..=10u32)
        .flat_map(|n| {
            (n % 2..=n)
                .step_by(2)
                .map(move |m| ZernikeIndex { n, m: m as i32 })
        })
        .collect()
}

/// Number of moments returned by [`standard_indices`].
pub const STANDARD_COUNT: usize = 32;

fn radial_unchecked(n: u32, m: u32, p: f64) -> f64 {
    let half_sum = ((n + m) / 2) as usize;
    let half_diff = ((n - m) / 2) as usize;
    let n = n as usize;
    let mut acc = 0.0;
    for s in 0..=half_diff {
        let c = FACTORIALS[n - s]
            / (FACTORIALS[s] * FACTORIALS[half_sum - s] * FACTORIALS[half_diff - s]);
        let term = c * p.powi((n - 2 * s) as i32);
        if s % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Radial polynomial `R_{n,m}(p)` by its factorial series.
pub fn radial_poly(n: u32, m: i32, p: f64) -> Result<f64> {
    let idx = ZernikeIndex::new(n, m)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("radius {p} outside [0, 1]")));
    }
    Ok(radial_unchecked(idx.n, idx.m.unsigned_abs(), p))
}

/// Basis function `V_{n,m}(p, theta) = R_{n,m}(p) e^{j m theta}`.
pub fn basis(n: u32, m: i32, p: f64, theta: f64) -> Result<Complex64> {
    let r = radial_poly(n, m, p)?;
    Ok(Complex64::from_polar(r, m as f64 * theta))
}

/// Indices together with the moment magnitudes of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZernikeMomentSet {
    pub indices: Vec<ZernikeIndex>,
    pub magnitudes: Vec<f64>,
}

struct DiskSample {
    x: usize,
    y: usize,
    p: f64,
    unit: Complex64,
}

fn disk_samples(width: usize, height: usize) -> (Vec<DiskSample>, f64) {
    let half = width.min(height) as f64 / 2.0;
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let mut out = Vec::new();
    for y in 0..height {
        let yn = (cy - (y as f64 + 0.5)) / half;
        for x in 0..width {
            let xn = (x as f64 + 0.5 - cx) / half;
            let p = xn.hypot(yn);
            if p <= 1.0 {
                let unit = if p > 0.0 {
                    Complex64::new(xn / p, yn / p)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                out.push(DiskSample { x, y, p, unit });
            }
        }
    }
    (out, 1.0 / (half * half))
}

/// Complex moments `Z_{n,m} = (n+1)/pi * sum f conj(V) dA` over the disk.
pub fn complex_moments(
    component: &Plane,
    indices: &[ZernikeIndex],
) -> Result<Vec<Complex64>> {
    let (samples, area) = disk_samples(component.width(), component.height());
    let mut out = Vec::with_capacity(indices.len());
    for idx in indices {
        let idx = ZernikeIndex::new(idx.n, idx.m)?;
        let am = idx.m.unsigned_abs();
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &samples {
            let f = component.get(s.x, s.y);
            if f == 0.0 {
                continue;
            }
            // e^{-j m theta}
            let rot = s.unit.powi(idx.m).conj();
            acc += rot * (f * radial_unchecked(idx.n, am, s.p));
        }
        out.push(acc * ((idx.n + 1) as f64 / PI * area));
    }
    Ok(out)
}

/// Moment magnitudes `|Z_{n,m}|`, which are invariant to rotation.
pub fn moments(component: &Plane, indices: &[ZernikeIndex]) -> Result<ZernikeMomentSet> {
    let magnitudes = complex_moments(component, indices)?
        .iter()
        .map(|z| z.norm())
        .collect();
    Ok(ZernikeMomentSet {
        indices: indices.to_vec(),
        magnitudes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::spiculated_blob;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Coefficients of `p^n, p^(n-2), ..., p^m`, expanded symbolically.
    const EXPANDED: &[(u32, i32, &[i64])] = &[
        (2, 0, &[2, -1]),
        (3, 1, &[3, -2]),
        (3, 3, &[1]),
        (4, 0, &[6, -6, 1]),
        (4, 2, &[4, -3]),
        (4, 4, &[1]),
        (5, 1, &[10, -12, 3]),
        (5, 3, &[5, -4]),
        (5, 5, &[1]),
        (6, 0, &[20, -30, 12, -1]),
        (6, 2, &[15, -20, 6]),
        (6, 4, &[6, -5]),
        (6, 6, &[1]),
        (7, 1, &[35, -60, 30, -4]),
        (7, 3, &[21, -30, 10]),
        (7, 5, &[7, -6]),
        (7, 7, &[1]),
        (8, 0, &[70, -140, 90, -20, 1]),
        (8, 2, &[56, -105, 60, -10]),
        (8, 4, &[28, -42, 15]),
        (8, 6, &[8, -7]),
        (8, 8, &[1]),
        (9, 1, &[126, -280, 210, -60, 5]),
        (9, 3, &[84, -168, 105, -20]),
        (9, 5, &[36, -56, 21]),
        (9, 7, &[9, -8]),
        (9, 9, &[1]),
        (10, 0, &[252, -630, 560, -210, 30, -1]),
        (10, 2, &[210, -504, 420, -140, 15]),
        (10, 4, &[120, -252, 168, -35]),
        (10, 6, &[45, -72, 28]),
        (10, 8, &[10, -9]),
        (10, 10, &[1]),
    ];

    fn expanded(n: u32, coeffs: &[i64], p: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| *c as f64 * p.powi(n as i32 - 2 * i as i32))
            .sum()
    }

    #[test]
    fn standard_index_counts() {
        let idx = standard_indices();
        assert_eq!(idx.len(), STANDARD_COUNT);
        let expect = [(3, 2), (4, 3), (5, 3), (6, 4), (7, 4), (8, 5), (9, 5), (10, 6)];
        for (n, count) in expect {
            assert_eq!(idx.iter().filter(|i| i.n == n).count(), count, "n={n}");
        }
        assert!(idx.windows(2).all(|w| (w[0].n, w[0].m) < (w[1].n, w[1].m)));
        assert_eq!(idx[0], ZernikeIndex { n: 3, m: 1 });
        assert_eq!(idx[31], ZernikeIndex { n: 10, m: 10 });
    }

    #[test]
    fn radial_matches_expanded_polynomials() {
        for (n, m, coeffs) in EXPANDED {
            for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let got = radial_poly(*n, *m, p).unwrap();
                let want = expanded(*n, coeffs, p);
                assert!((got - want).abs() < 1e-10, "R({n},{m})({p}) = {got}, want {want}");
                assert_eq!(radial_poly(*n, -*m, p).unwrap(), got);
            }
        }
        assert_eq!(EXPANDED.len(), STANDARD_COUNT + 1);
    }

    #[test]
    fn radial_special_values() {
        assert!((radial_poly(2, 0, 0.5).unwrap() + 0.5).abs() < 1e-15);
        for idx in standard_indices() {
            assert!((radial_poly(idx.n, idx.m, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        for n in 0..=10 {
            for p in [0.1, 0.6, 0.9] {
                let r = radial_poly(n, n as i32, p).unwrap();
                assert!((r - p.powi(n as i32)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn invalid_indices_are_rejected() {
        assert!(radial_poly(3, 2, 0.5).is_err());
        assert!(radial_poly(2, 4, 0.5).is_err());
        assert!(radial_poly(4, 0, 1.5).is_err());
        assert!(ZernikeIndex::new(22, 0).is_err());
        assert!(basis(5, 2, 0.3, 0.0).is_err());
    }

    #[test]
    fn basis_values() {
        let v = basis(4, 2, 0.7, 0.0).unwrap();
        assert_eq!(v.im, 0.0);
        assert!((v.re - radial_poly(4, 2, 0.7).unwrap()).abs() < 1e-15);
        let p: f64 = 0.8;
        let v = basis(3, 3, p, PI / 3.0).unwrap();
        assert!((v.re + p.powi(3)).abs() < 1e-12 && v.im.abs() < 1e-12);
        let a = basis(6, 4, 0.4, 1.1).unwrap();
        let b = basis(6, -4, 0.4, 1.1).unwrap();
        assert!((a.conj() - b).norm() < 1e-15);
        assert!((a.norm() - radial_poly(6, 4, 0.4).unwrap().abs()).abs() < 1e-15);
    }

    /// Samples every basis function on a 256 x 256 grid directly from
    /// `basis`, independent of the moment code.
    fn sampled_basis(idx: ZernikeIndex) -> Vec<Complex64> {
        let size = 256;
        let half = size as f64 / 2.0;
        let mut out = Vec::new();
        for y in 0..size {
            for x in 0..size {
                let xn = (x as f64 + 0.5 - half) / half;
                let yn = (half - y as f64 - 0.5) / half;
                let p = (xn * xn + yn * yn).sqrt();
                out.push(if p <= 1.0 {
                    basis(idx.n, idx.m, p, yn.atan2(xn)).unwrap()
                } else {
                    Complex64::new(0.0, 0.0)
                });
            }
        }
        out
    }

    #[test]
    fn discrete_gram_is_nearly_diagonal() {
        let idx = standard_indices();
        let funcs: Vec<Vec<Complex64>> = idx.iter().map(|i| sampled_basis(*i)).collect();
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        };
        let diag: Vec<f64> = funcs.iter().map(|f| dot(f, f).re).collect();
        let mut worst: f64 = 0.0;
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                let rel = dot(&funcs[i], &funcs[j]).norm() / (diag[i] * diag[j]).sqrt();
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-2, "worst off-diagonal {worst}");
        let a = sampled_basis(ZernikeIndex { n: 4, m: 2 });
        let b = sampled_basis(ZernikeIndex { n: 6, m: 2 });
        assert!(dot(&a, &b).norm() < 1e-2 * dot(&a, &a).re);
    }

    #[test]
    fn normalisation_recovers_basis_function() {
        // the moment of V_{n,m} itself approaches 1 as the grid is refined
        let size = 128;
        let idx = ZernikeIndex { n: 6, m: 2 };
        let half = size as f64 / 2.0;
        let re = Plane::from_fn(size, size, |x, y| {
            let xn = (x as f64 + 0.5 - half) / half;
            let yn = (half - y as f64 - 0.5) / half;
            let p = xn.hypot(yn);
            if p <= 1.0 {
                basis(idx.n, idx.m, p, yn.atan2(xn)).unwrap().re
            } else {
                0.0
            }
        });
        // Re V = (V + conj V) / 2 so Z_{n,m} of it is 1/2
        let z = complex_moments(&re, &[idx]).unwrap()[0];
        assert!((z.re - 0.5).abs() < 0.02 && z.im.abs() < 0.02, "{z}");
    }

    fn blob(size: usize, cx: f64, cy: f64, sigma: f64) -> Plane {
        Plane::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        })
    }

    #[test]
    fn magnitudes_survive_rotation() {
        let img = blob(64, 20.0, 26.0, 5.0);
        let a = moments(&img, &standard_indices()).unwrap();
        let b = moments(&img.rotate90(), &standard_indices()).unwrap();
        for (x, y) in a.magnitudes.iter().zip(&b.magnitudes) {
            assert!((x - y).abs() <= 0.02 * x.abs().max(1e-12), "{x} vs {y}");
        }
        // an arbitrary angle on an analytic blob, coarser agreement
        let (r, phi) = (9.0f64, 0.6f64);
        let turned = blob(64, 32.0 + r * phi.cos(), 32.0 - r * phi.sin(), 5.0);
        let base = blob(64, 32.0 + r, 32.0, 5.0);
        let a = moments(&base, &standard_indices()).unwrap();
        let b = moments(&turned, &standard_indices()).unwrap();
        let peak = a.magnitudes.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.magnitudes.iter().zip(&b.magnitudes) {
            assert!((x - y).abs() <= 0.02 * peak, "{x} vs {y}");
        }
    }

    #[test]
    fn spiculated_blob_has_stronger_fivefold_moment() {
        let size = 64;
        let spic = spiculated_blob(size, 10.0, 5, 1.0);
        let area = spic.as_plane().sum();
        let r = (area / PI).sqrt();
        let c = size as f64 / 2.0;
        let disk = Plane::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
            if dx.hypot(dy) <= r {
                1.0
            } else {
                0.0
            }
        });
        assert!((disk.sum() - area).abs() / area < 0.05);
        let idx = [ZernikeIndex { n: 5, m: 5 }];
        let s = moments(spic.as_plane(), &idx).unwrap().magnitudes[0];
        let d = moments(&disk, &idx).unwrap().magnitudes[0];
        assert!(s > d, "spiculated {s} vs disk {d}");
    }

    #[test]
    fn zero_image_has_zero_moments() {
        let m = moments(&Plane::zeros(16, 12), &standard_indices()).unwrap();
        assert!(m.magnitudes.iter().all(|v| *v == 0.0));
    }

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn conjugate_repetitions_share_magnitude(seed in any::<u64>(), w in 4usize..20, h in 4usize..20) {
            let img = random_plane(w, h, seed);
            for idx in standard_indices() {
                let pair = [idx, ZernikeIndex { n: idx.n, m: -idx.m }];
                let z = complex_moments(&img, &pair).unwrap();
                prop_assert!((z[0].norm() - z[1].norm()).abs() < 1e-12);
            }
        }

        #[test]
        fn moments_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f = random_plane(12, 12, seed);
            let g = random_plane(12, 12, seed.wrapping_add(1));
            let combo = Plane::from_fn(12, 12, |x, y| a * f.get(x, y) + b * g.get(x, y));
            let idx = standard_indices();
            let zf = complex_moments(&f, &idx).unwrap();
            let zg = complex_moments(&g, &idx).unwrap();
            let zc = complex_moments(&combo, &idx).unwrap();
            for i in 0..idx.len() {
                prop_assert!((zc[i] - (zf[i] * a + zg[i] * b)).norm() < 1e-10);
            }
        }
    }
}
