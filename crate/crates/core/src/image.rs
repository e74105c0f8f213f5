//! Two-dimensional pixel containers.
//!
//! [`Plane`] holds arbitrary real samples (wavelet coefficients, basis
//! function samples). [`GrayImage`] is a plane whose intensities are
//! constrained to `[0, 1]`.

use crate::error::{Error, Result};

/// Row-major grid of real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions(format!(
                "zero-sized plane {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{} samples for a {width}x{height} plane",
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "zero-sized plane");
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "zero-sized plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Plane {
        Plane::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Quarter turn counter-clockwise (as displayed, y pointing down).
    pub fn rotate90(&self) -> Plane {
        let (w, h) = (self.width, self.height);
        Plane::from_fn(h, w, |x, y| self.get(w - 1 - y, x))
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "plane shapes differ"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Grayscale image with every intensity in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Plane);

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_plane(Plane::new(width, height, data)?)
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        if let Some(v) = plane.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(GrayImage(plane))
    }

    /// Clamps every sample into `[0, 1]` (NaN becomes 0).
    pub fn from_plane_clamped(mut plane: Plane) -> Self {
        for v in plane.data.iter_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        GrayImage(plane)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        GrayImage(Plane::zeros(width, height))
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_plane(Plane::filled(width, height, value))
    }

    pub fn as_plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y)
    }

    /// `1 - f` pixelwise.
    pub fn complement(&self) -> GrayImage {
        GrayImage(self.0.map(|v| 1.0 - v))
    }

    pub fn mean(&self) -> f64 {
        self.0.sum() / self.0.data.len() as f64
    }

    pub fn rotate90(&self) -> GrayImage {
        GrayImage(self.0.rotate90())
    }
}

impl AsRef<Plane> for GrayImage {
    fn as_ref(&self) -> &Plane {
        &self.0
    }
}

impl AsRef<Plane> for Plane {
    fn as_ref(&self) -> &Plane {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_ranges() {
        assert!(Plane::new(0, 3, vec![]).is_err());
        assert!(Plane::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.5, 1.0]).is_ok());
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let p = Plane::from_fn(3, 5, |x, y| (x * 7 + y) as f64);
        let r = p.rotate90().rotate90().rotate90().rotate90();
        assert_eq!(p, r);
        assert_eq!(p.rotate90().width(), 5);
    }
}
