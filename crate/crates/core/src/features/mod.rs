//! Feature extractors and dataset-level feature handling.
//!
//! The wavelet-Zernike extractor stretches the histogram, runs a four-level
//! decomposition and takes the 32 standard Zernike magnitudes of each of the
//! 13 components, in the order given by [`feature_layout`]. The spectrum
//! extractor summarises the pattern spectrum under a flat 3x3 element.

mod matrix;
mod normalize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::normalize_histogram;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::morphology::{pattern_spectrum, SpectrumStats, StructuringElement};
use crate::wavelets::{decompose, filter_bank, Subband, WaveletFamily};
use crate::zernike::{moments, standard_indices, ZernikeIndex, STANDARD_COUNT};

pub use matrix::{load_features, save_features, FeatureMatrix};
pub use normalize::Normalization;

pub const WAVELET_LEVELS: usize = 4;
pub const COMPONENT_COUNT: usize = 3 * WAVELET_LEVELS + 1;
pub const WAVELET_ZERNIKE_DIMS: usize = COMPONENT_COUNT * STANDARD_COUNT;
pub const SPECTRUM_DIMS: usize = 7;

/// Flat 3x3 elements available to the spectrum extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumElement {
    /// 8-connected 3x3 square.
    Square,
    /// 4-connected 3x3 cross.
    Cross,
}

impl SpectrumElement {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumElement::Square => "square",
            SpectrumElement::Cross => "cross",
        }
    }

    pub fn element(self) -> StructuringElement {
        match self {
            SpectrumElement::Square => StructuringElement::square(1),
            SpectrumElement::Cross => StructuringElement::cross(),
        }
    }
}

impl FromStr for SpectrumElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(SpectrumElement::Square),
            "cross" => Ok(SpectrumElement::Cross),
            _ => Err(Error::UnknownName {
                kind: "structuring element",
                name: s.to_string(),
                expected: "square, cross".into(),
            }),
        }
    }
}

/// Identifies an extractor and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtractorId {
    WaveletZernike { family: WaveletFamily },
    Spectrum { element: SpectrumElement },
}

impl ExtractorId {
    pub fn dims(self) -> usize {
        match self {
            ExtractorId::WaveletZernike { .. } => WAVELET_ZERNIKE_DIMS,
            ExtractorId::Spectrum { .. } => SPECTRUM_DIMS,
        }
    }

    /// Short extractor name without parameters.
    pub fn kind(self) -> &'static str {
        match self {
            ExtractorId::WaveletZernike { .. } => "wavelet-zernike",
            ExtractorId::Spectrum { .. } => "spectrum",
        }
    }

    /// Wavelet family or structuring element name.
    pub fn variant(self) -> &'static str {
        match self {
            ExtractorId::WaveletZernike { family } => family.short_name(),
            ExtractorId::Spectrum { element } => element.as_str(),
        }
    }
}

impl fmt::Display for ExtractorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.variant())
    }
}

impl FromStr for ExtractorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, variant) = s.split_once(':').ok_or_else(|| {
            Error::Malformed(format!("extractor id '{s}' is not of the form kind:variant"))
        })?;
        match kind {
            "wavelet-zernike" => Ok(ExtractorId::WaveletZernike {
                family: variant.parse()?,
            }),
            "spectrum" => Ok(ExtractorId::Spectrum {
                element: variant.parse()?,
            }),
            _ => Err(Error::UnknownName {
                kind: "extractor",
                name: kind.to_string(),
                expected: "wavelet-zernike, spectrum".into(),
            }),
        }
    }
}

/// Raw (unnormalized) feature values of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub extractor: ExtractorId,
}

/// Position of one wavelet-Zernike feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSlot {
    pub level: usize,
    pub subband: Subband,
    pub moment: ZernikeIndex,
}

/// Frozen order of the 416 wavelet-Zernike features: levels ascending,
/// horizontal, vertical and diagonal details per level, then the final
/// approximation; the 32 moments in standard order within each component.
pub fn feature_layout() -> Vec<FeatureSlot> {
    let moments = standard_indices();
    let mut out = Vec::with_capacity(WAVELET_ZERNIKE_DIMS);
    for (level, subband) in crate::wavelets::component_layout(WAVELET_LEVELS) {
        for moment in &moments {
            out.push(FeatureSlot {
                level,
                subband,
                moment: *moment,
            });
        }
    }
    out
}

/// Extracts the 416 raw wavelet-Zernike features.
pub fn extract_wavelet_zernike(img: &GrayImage, family: WaveletFamily) -> Result<FeatureVector> {
    let min_side = 1 << WAVELET_LEVELS;
    if img.width() < min_side || img.height() < min_side {
        return Err(Error::Dimensions(format!(
            "{}x{} image is smaller than {min_side}x{min_side}",
            img.width(),
            img.height()
        )));
    }
    let bank = filter_bank(family)?;
    let stretched = normalize_histogram(img);
    let decomposition = decompose(stretched.as_plane(), &bank, WAVELET_LEVELS)?;
    let indices = standard_indices();
    let mut values = Vec::with_capacity(WAVELET_ZERNIKE_DIMS);
    for (_, _, component) in decomposition.components() {
        values.extend(moments(component, &indices)?.magnitudes);
    }
    debug_assert_eq!(values.len(), WAVELET_ZERNIKE_DIMS);
    Ok(FeatureVector {
        values,
        extractor: ExtractorId::WaveletZernike { family },
    })
}

/// Extracts the 7 pattern-spectrum statistics.
///
/// The opening budget is `width + height`, enough for the scaled element to
/// cover the whole image.
pub fn extract_spectrum(img: &GrayImage, element: SpectrumElement) -> Result<FeatureVector> {
    let stretched = normalize_histogram(img);
    let spectrum = pattern_spectrum(
        &stretched,
        &element.element(),
        img.width() + img.height(),
    )?;
    Ok(FeatureVector {
        values: SpectrumStats::from_values(&spectrum.xi)?.to_vec(),
        extractor: ExtractorId::Spectrum { element },
    })
}

/// Runs the extractor named by `id`.
pub fn extract(img: &GrayImage, id: ExtractorId) -> Result<FeatureVector> {
    match id {
        ExtractorId::WaveletZernike { family } => extract_wavelet_zernike(img, family),
        ExtractorId::Spectrum { element } => extract_spectrum(img, element),
    }
}
