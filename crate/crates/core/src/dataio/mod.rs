//! Image loading, dataset manifests, synthetic phantoms and class balancing.

mod balance;
mod manifest;
mod phantom;
mod pgm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub use balance::balance_dataset;
pub use manifest::{DatasetManifest, ManifestEntry};
pub use phantom::{
    generate_phantom_dataset, phantom_image, render_phantom, spiculated_blob, Mass, PhantomConfig,
    PhantomParams,
};
pub use pgm::{decode_pgm, encode_pgm, save_pgm, save_pgm16};

/// Diagnostic class of a region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Normal,
    Benign,
    Malignant,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Normal, ClassLabel::Benign, ClassLabel::Malignant];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Benign => "benign",
            ClassLabel::Malignant => "malignant",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(ClassLabel::Normal),
            "benign" => Ok(ClassLabel::Benign),
            "malignant" => Ok(ClassLabel::Malignant),
            other => Err(Error::UnknownName {
                kind: "class label",
                name: other.to_string(),
                expected: "normal, benign, malignant".into(),
            }),
        }
    }
}

/// One feature vector with its label and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: ClassLabel,
    pub synthetic: bool,
}

impl LabeledSample {
    pub fn real(features: Vec<f64>, label: ClassLabel) -> Self {
        LabeledSample {
            features,
            label,
            synthetic: false,
        }
    }
}

/// Loads a grayscale PGM (P5, 8 or 16 bit) or PNG and scales it into `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        return decode_pgm(&bytes);
    }
    if bytes.starts_with(b"\x89PNG") {
        return decode_png(&bytes);
    }
    Err(Error::UnsupportedFormat(format!(
        "{}: neither binary PGM nor PNG",
        path.display()
    )))
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    use image::{DynamicImage, ImageFormat};
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Dimensions("zero-sized PNG".into()));
    }
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "PNG color type {:?} is not grayscale",
                other.color()
            )))
        }
    };
    GrayImage::new(w, h, data)
}

/// Linear stretch so the darkest pixel becomes 0 and the brightest 1.
///
/// Constant images map to all zeros.
pub fn normalize_histogram(img: &GrayImage) -> GrayImage {
    let (lo, hi) = img.as_plane().min_max();
    let range = hi - lo;
    let plane = if range > 0.0 {
        img.as_plane().map(|v| ((v - lo) / range).clamp(0.0, 1.0))
    } else {
        img.as_plane().map(|_| 0.0)
    };
    GrayImage::from_plane_clamped(plane)
}
