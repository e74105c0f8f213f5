//! Synthetic region-of-interest phantoms for desk-scale experiments.
//!
//! Normal ROIs are smoothed noise texture. Benign ROIs add a bright disk with
//! a soft radial edge. Malignant ROIs add a blob whose radius is modulated by
//! narrow angular spikes and whose edge is sharp.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Plane};

use super::manifest::{DatasetManifest, ManifestEntry};
use super::pgm::save_pgm;
use super::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhantomConfig {
    pub normals: usize,
    pub benign: usize,
    pub malignant: usize,
    pub size: usize,
    pub seed: u64,
}

impl PhantomConfig {
    pub fn count(&self, label: ClassLabel) -> usize {
        match label {
            ClassLabel::Normal => self.normals,
            ClassLabel::Benign => self.benign,
            ClassLabel::Malignant => self.malignant,
        }
    }
}

/// A radial mass profile added on top of the background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mass {
    pub cx: f64,
    pub cy: f64,
    /// Core radius in pixels.
    pub radius: f64,
    pub amplitude: f64,
    /// Width of the edge ramp in pixels.
    pub edge: f64,
    /// Number of spicules; zero gives a round mass.
    pub spikes: u32,
    /// Spicule length relative to the core radius.
    pub spike_length: f64,
    pub phase: f64,
}

impl Mass {
    fn boundary(&self, theta: f64) -> f64 {
        if self.spikes == 0 {
            return self.radius;
        }
        let lobe = (self.spikes as f64 * (theta - self.phase)).cos().max(0.0);
        self.radius * (1.0 + self.spike_length * lobe.powi(8))
    }

    fn intensity(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let d = dx.hypot(dy);
        let r = self.boundary(dy.atan2(dx));
        let t = ((r - d) / self.edge + 0.5).clamp(0.0, 1.0);
        self.amplitude * t * t * (3.0 - 2.0 * t)
    }
}

/// Full description of one phantom image.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    pub size: usize,
    pub background_level: f64,
    pub noise_amplitude: f64,
    pub noise_seed: u64,
    pub mass: Option<Mass>,
}

impl PhantomParams {
    /// Draws random phantom parameters for the given class.
    pub fn sample(label: ClassLabel, size: usize, rng: &mut impl Rng) -> Self {
        let s = size as f64;
        let c = (s - 1.0) / 2.0;
        let jitter = s / 16.0;
        let centre = |rng: &mut dyn rand::RngCore| {
            (
                c + rng.random_range(-jitter..=jitter),
                c + rng.random_range(-jitter..=jitter),
            )
        };
        let background_level = rng.random_range(0.15..0.30);
        let noise_amplitude = rng.random_range(0.25..0.40);
        let noise_seed = rng.random();
        let mass = match label {
            ClassLabel::Normal => None,
            ClassLabel::Benign => {
                let (cx, cy) = centre(rng);
                Some(Mass {
                    cx,
                    cy,
                    radius: s * rng.random_range(0.12..0.20),
                    amplitude: rng.random_range(0.30..0.50),
                    edge: s * rng.random_range(0.05..0.08),
                    spikes: 0,
                    spike_length: 0.0,
                    phase: 0.0,
                })
            }
            ClassLabel::Malignant => {
                let (cx, cy) = centre(rng);
                Some(Mass {
                    cx,
                    cy,
                    radius: s * rng.random_range(0.08..0.13),
                    amplitude: rng.random_range(0.30..0.50),
                    edge: 1.5,
                    spikes: rng.random_range(5..=9),
                    spike_length: rng.random_range(0.8..1.4),
                    phase: rng.random_range(0.0..2.0 * PI),
                })
            }
        };
        PhantomParams {
            size,
            background_level,
            noise_amplitude,
            noise_seed,
            mass,
        }
    }
}

/// Renders a phantom; values are clamped into `[0, 1]`.
pub fn render_phantom(params: &PhantomParams) -> GrayImage {
    let n = params.size;
    let texture = smoothed_noise(n, params.noise_seed);
    let plane = Plane::from_fn(n, n, |x, y| {
        let mut v = params.background_level + params.noise_amplitude * (texture.get(x, y) - 0.5);
        if let Some(m) = &params.mass {
            v += m.intensity(x as f64, y as f64);
        }
        v
    });
    GrayImage::from_plane_clamped(plane)
}

/// Binary-valued spiculated blob centred in a `size` square, used as a
/// shape probe.
pub fn spiculated_blob(size: usize, radius: f64, spikes: u32, spike_length: f64) -> GrayImage {
    let c = (size as f64 - 1.0) / 2.0;
    render_phantom(&PhantomParams {
        size,
        background_level: 0.0,
        noise_amplitude: 0.0,
        noise_seed: 0,
        mass: Some(Mass {
            cx: c,
            cy: c,
            radius,
            amplitude: 1.0,
            edge: 1e-9,
            spikes,
            spike_length,
            phase: 0.3,
        }),
    })
}

/// Uniform noise blurred twice with a 5x5 box, rescaled to roughly `[0, 1]`.
fn smoothed_noise(n: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Plane::from_fn(n, n, |_, _| rng.random::<f64>());
    let blurred = box_blur(&box_blur(&raw, 2), 2);
    let (lo, hi) = blurred.min_max();
    let span = (hi - lo).max(1e-12);
    blurred.map(|v| (v - lo) / span)
}

fn box_blur(p: &Plane, r: usize) -> Plane {
    let (w, h) = (p.width(), p.height());
    let blur_1d = |get: &dyn Fn(usize) -> f64, len: usize, i: usize| {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(len - 1);
        (lo..=hi).map(get).sum::<f64>() / (hi - lo + 1) as f64
    };
    let rows = Plane::from_fn(w, h, |x, y| blur_1d(&|i| p.get(i, y), w, x));
    Plane::from_fn(w, h, |x, y| blur_1d(&|i| rows.get(x, i), h, y))
}

fn image_seed(seed: u64, label: ClassLabel, index: usize) -> u64 {
    // splitmix64 over (seed, label, index)
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(1 + label.index() as u64))
        .wrapping_add((index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders the `index`-th phantom of a class exactly as the dataset
/// generator would.
pub fn phantom_image(config: &PhantomConfig, label: ClassLabel, index: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(image_seed(config.seed, label, index));
    render_phantom(&PhantomParams::sample(label, config.size, &mut rng))
}

/// Writes `<label>_<index>.pgm` files plus `manifest.csv` into `out_dir`.
pub fn generate_phantom_dataset(
    config: &PhantomConfig,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    if config.normals == 0 || config.benign == 0 || config.malignant == 0 {
        return Err(Error::InvalidArgument(
            "every class needs at least one phantom".into(),
        ));
    }
    if config.size < 32 {
        return Err(Error::InvalidArgument(format!(
            "phantom size {} is below the 32 pixel minimum",
            config.size
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::new();
    for label in ClassLabel::ALL {
        for i in 0..config.count(label) {
            let name = format!("{}_{:04}.pgm", label.as_str(), i);
            save_pgm(&phantom_image(config, label, i), out_dir.join(&name))?;
            entries.push(ManifestEntry {
                image_path: name,
                label,
            });
        }
    }
    let manifest = DatasetManifest::new(out_dir, entries)?;
    manifest.save(out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::load_image;

    #[test]
    fn counts_and_determinism() {
        let cfg = PhantomConfig {
            normals: 10,
            benign: 10,
            malignant: 10,
            size: 128,
            seed: 1,
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = generate_phantom_dataset(&cfg, a.path()).unwrap();
        generate_phantom_dataset(&cfg, b.path()).unwrap();
        assert_eq!(ma.entries.len(), 30);
        for l in ClassLabel::ALL {
            assert_eq!(ma.count(l), 10);
        }
        for e in &ma.entries {
            let x = std::fs::read(a.path().join(&e.image_path)).unwrap();
            let y = std::fs::read(b.path().join(&e.image_path)).unwrap();
            assert_eq!(x, y, "{}", e.image_path);
        }
        let reloaded = DatasetManifest::load(a.path().join("manifest.csv")).unwrap();
        assert_eq!(reloaded.entries, ma.entries);
    }

    #[test]
    fn benign_is_brighter_than_normal() {
        let cfg = PhantomConfig {
            normals: 1,
            benign: 1,
            malignant: 1,
            size: 64,
            seed: 7,
        };
        let dir = tempfile::tempdir().unwrap();
        let m = generate_phantom_dataset(&cfg, dir.path()).unwrap();
        let mean = |l: ClassLabel| {
            let e = m.entries.iter().find(|e| e.label == l).unwrap();
            load_image(m.resolve(e)).unwrap().mean()
        };
        assert!(mean(ClassLabel::Benign) > mean(ClassLabel::Normal));
    }

    #[test]
    fn rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PhantomConfig {
            normals: 1,
            benign: 0,
            malignant: 1,
            size: 64,
            seed: 0,
        };
        assert!(generate_phantom_dataset(&cfg, dir.path()).is_err());
        cfg.benign = 1;
        cfg.size = 16;
        assert!(generate_phantom_dataset(&cfg, dir.path()).is_err());
        cfg.size = 64;
        let file = dir.path().join("plain-file");
        std::fs::write(&file, b"x").unwrap();
        assert!(matches!(
            generate_phantom_dataset(&cfg, &file),
            Err(Error::Io { .. })
        ));
    }
}
