//! Granulometry, pattern spectrum and its summary statistics.
//!
//! `V(k)` is the residual area after the k-th opening, where the k-th
//! opening uses the element scaled by `k` and is applied to the (k-1)-th
//! result. `Xi[k] = 1 - V(k) / V(0)` and `xi[k] = Xi[k+1] - Xi[k]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::{dilate, dilate_fast, erode, erode_fast, StructuringElement};

/// `V(k) < CONVERGENCE_TOLERANCE * V(0)` counts as a null residual.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_K: usize = 64;

const MODE_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpectrum {
    /// `V(0..=K)`.
    pub residual_areas: Vec<f64>,
    /// Accumulated density `Xi[0..=K]`.
    pub cumulative: Vec<f64>,
    /// Density `xi[0..K]`.
    pub xi: Vec<f64>,
}

impl PatternSpectrum {
    /// Index `K` at which the residual vanished.
    pub fn convergence_index(&self) -> usize {
        self.residual_areas.len() - 1
    }
}

/// k-th opening of `prev`.
fn scaled_opening(prev: &GrayImage, g: &StructuringElement, k: usize) -> GrayImage {
    match g.scaled(k) {
        Some(kg) => dilate_fast(&erode_fast(prev, &kg), &kg),
        None => {
            // k-fold Minkowski self-sum: k erosions then k dilations
            let mut cur = prev.clone();
            for _ in 0..k {
                cur = erode(&cur, g);
            }
            for _ in 0..k {
                cur = dilate(&cur, g);
            }
            cur
        }
    }
}

/// Runs the granulometry until the residual area vanishes.
///
/// Fails with [`Error::BlankImage`] when `V(0) = 0` and with
/// [`Error::NotConverged`] when `max_k` openings leave a residual.
pub fn pattern_spectrum(
    f: &GrayImage,
    g: &StructuringElement,
    max_k: usize,
) -> Result<PatternSpectrum> {
    let v0 = f.as_plane().sum();
    if v0 <= 0.0 {
        return Err(Error::BlankImage);
    }
    let mut areas = vec![v0];
    let mut cur = f.clone();
    let mut converged = false;
    for k in 1..=max_k {
        cur = scaled_opening(&cur, g, k);
        let v = cur.as_plane().sum();
        if v < CONVERGENCE_TOLERANCE * v0 {
            areas.push(0.0);
            converged = true;
            break;
        }
        areas.push(v);
    }
    if !converged {
        return Err(Error::NotConverged(max_k));
    }
    let cumulative: Vec<f64> = areas.iter().map(|v| 1.0 - v / v0).collect();
    let xi = cumulative.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(PatternSpectrum {
        residual_areas: areas,
        cumulative,
        xi,
    })
}

/// Seven summary statistics of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub mean: f64,
    pub std_dev: f64,
    pub mode: f64,
    pub median: f64,
    pub kurtosis: f64,
    pub minimum: f64,
    pub maximum: f64,
}

impl SpectrumStats {
    /// Statistics of `values` treated as a plain sample.
    ///
    /// `std_dev` is the population deviation, `kurtosis` is `m4 / m2^2`
    /// (0 when `m2 = 0`), and `mode` is the centre of the fullest of 32
    /// equal-width bins spanning `[min, max]`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) } else { 0.0 };

        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (minimum, maximum) = (sorted[0], sorted[sorted.len() - 1]);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };

        let span = maximum - minimum;
        let mode = if span > 0.0 {
            let width = span / MODE_BINS as f64;
            let mut counts = [0usize; MODE_BINS];
            for v in values {
                let b = (((v - minimum) / width) as usize).min(MODE_BINS - 1);
                counts[b] += 1;
            }
            let best = counts
                .iter()
                .enumerate()
                .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
            (minimum + (best as f64 + 0.5) * width).clamp(minimum, maximum)
        } else {
            minimum
        };

        Ok(SpectrumStats {
            mean,
            std_dev: m2.sqrt(),
            mode,
            median,
            kurtosis,
            minimum,
            maximum,
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.mean,
            self.std_dev,
            self.mode,
            self.median,
            self.kurtosis,
            self.minimum,
            self.maximum,
        ]
    }
}

/// Spectrum statistics with the default opening budget.
pub fn spectrum_features(f: &GrayImage, g: &StructuringElement) -> Result<SpectrumStats> {
    let spectrum = pattern_spectrum(f, g, DEFAULT_MAX_K)?;
    SpectrumStats::from_values(&spectrum.xi)
}
