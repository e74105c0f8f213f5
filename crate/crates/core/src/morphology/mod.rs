//! Grayscale mathematical morphology on `[0, 1]` images.
//!
//! Erosion and dilation follow the fuzzy min/max formulation:
//! `erode(f)(u) = min_v max(f(v), 1 - g(u - v))` and
//! `dilate(f)(u) = max_v min(f(v), g(u - v))`, where `g` is the structuring
//! element. Reads outside the image contribute the identity of the outer
//! operator (1 for erosion, 0 for dilation).

mod fast;
mod spectrum;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Plane};

pub use spectrum::{
    pattern_spectrum, spectrum_features, PatternSpectrum, SpectrumStats, CONVERGENCE_TOLERANCE,
    DEFAULT_MAX_K,
};

/// Geometry tag used to build the scaled elements of a granulometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeShape {
    /// Flat `(2r+1)` square.
    Square { radius: usize },
    /// Flat L1 ball; radius 1 is the 3x3 cross.
    Diamond { radius: usize },
    /// Flat digital disk `x^2 + y^2 <= r^2`.
    Disk { radius: usize },
    /// Anything else, including non-flat elements.
    Arbitrary,
}

/// Origin-centred structuring element with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    values: Vec<f64>,
    shape: SeShape,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "structuring element {width}x{height} must have odd sides"
            )));
        }
        if values.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{} values for a {width}x{height} structuring element",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "structuring element values must lie in [0, 1]".into(),
            ));
        }
        Ok(StructuringElement {
            width,
            height,
            values,
            shape: SeShape::Arbitrary,
        })
    }

    fn flat_from_fn(radius: usize, shape: SeShape, inside: impl Fn(i64, i64) -> bool) -> Self {
        let side = 2 * radius + 1;
        let r = radius as i64;
        let mut values = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                values.push(if inside(dx, dy) { 1.0 } else { 0.0 });
            }
        }
        StructuringElement {
            width: side,
            height: side,
            values,
            shape,
        }
    }

    pub fn square(radius: usize) -> Self {
        Self::flat_from_fn(radius, SeShape::Square { radius }, |_, _| true)
    }

    /// The 3x3 cross (four-connected neighbourhood).
    pub fn cross() -> Self {
        Self::diamond(1)
    }

    pub fn diamond(radius: usize) -> Self {
        let r = radius as i64;
        Self::flat_from_fn(radius, SeShape::Diamond { radius }, |dx, dy| {
            dx.abs() + dy.abs() <= r
        })
    }

    pub fn disk(radius: usize) -> Self {
        let r2 = (radius * radius) as i64;
        Self::flat_from_fn(radius, SeShape::Disk { radius }, |dx, dy| {
            dx * dx + dy * dy <= r2
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> SeShape {
        self.shape
    }

    /// Value at offset `(dx, dy)` from the origin; zero outside the support.
    pub fn at(&self, dx: i64, dy: i64) -> f64 {
        let (hx, hy) = ((self.width / 2) as i64, (self.height / 2) as i64);
        if dx.abs() > hx || dy.abs() > hy {
            return 0.0;
        }
        self.values[((dy + hy) as usize) * self.width + (dx + hx) as usize]
    }

    pub fn is_flat(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Homothetic copy `k * B` for the shapes that have one.
    pub fn scaled(&self, k: usize) -> Option<StructuringElement> {
        match self.shape {
            SeShape::Square { radius } => Some(Self::square(radius * k)),
            SeShape::Diamond { radius } => Some(Self::diamond(radius * k)),
            SeShape::Disk { radius } => Some(Self::disk(radius * k)),
            SeShape::Arbitrary => None,
        }
    }

    fn offsets(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let (hx, hy) = ((self.width / 2) as i64, (self.height / 2) as i64);
        self.values.iter().enumerate().map(move |(i, &g)| {
            let dx = (i % self.width) as i64 - hx;
            let dy = (i / self.width) as i64 - hy;
            (dx, dy, g)
        })
    }
}

fn apply(
    f: &Plane,
    g: &StructuringElement,
    init: f64,
    term: impl Fn(f64, f64) -> f64,
    combine: impl Fn(f64, f64) -> f64,
    skip: impl Fn(f64) -> bool,
) -> Plane {
    let (w, h) = (f.width() as i64, f.height() as i64);
    let offsets: Vec<(i64, i64, f64)> = g.offsets().filter(|&(_, _, v)| !skip(v)).collect();
    Plane::from_fn(f.width(), f.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        let mut acc = init;
        for &(dx, dy, gv) in &offsets {
            // v = u - d
            let (vx, vy) = (x - dx, y - dy);
            if vx >= 0 && vy >= 0 && vx < w && vy < h {
                acc = combine(acc, term(f.get(vx as usize, vy as usize), gv));
            }
        }
        acc
    })
}

/// Grayscale erosion by `g`.
pub fn erode(f: &GrayImage, g: &StructuringElement) -> GrayImage {
    let out = apply(
        f.as_plane(),
        g,
        1.0,
        |fv, gv| fv.max(1.0 - gv),
        f64::min,
        |gv| gv == 0.0,
    );
    GrayImage::from_plane_clamped(out)
}

/// Grayscale dilation by `g`.
pub fn dilate(f: &GrayImage, g: &StructuringElement) -> GrayImage {
    let out = apply(
        f.as_plane(),
        g,
        0.0,
        |fv, gv| fv.min(gv),
        f64::max,
        |gv| gv == 0.0,
    );
    GrayImage::from_plane_clamped(out)
}

/// Erosion followed by dilation with the same element.
pub fn open(f: &GrayImage, g: &StructuringElement) -> GrayImage {
    dilate(&erode(f, g), g)
}

/// Dilation followed by erosion with the same element.
pub fn close(f: &GrayImage, g: &StructuringElement) -> GrayImage {
    erode(&dilate(f, g), g)
}

/// Erosion using the separable/rotated-grid fast path when `g` is a flat
/// square or diamond.
pub(crate) fn erode_fast(f: &GrayImage, g: &StructuringElement) -> GrayImage {
    match g.shape {
        SeShape::Square { radius } => {
            GrayImage::from_plane_clamped(fast::box_filter(f.as_plane(), radius, fast::Extreme::Min))
        }
        SeShape::Diamond { radius } => GrayImage::from_plane_clamped(fast::diamond_filter(
            f.as_plane(),
            radius,
            fast::Extreme::Min,
        )),
        _ => erode(f, g),
    }
}

pub(crate) fn dilate_fast(f: &GrayImage, g: &StructuringElement) -> GrayImage {
    match g.shape {
        SeShape::Square { radius } => {
            GrayImage::from_plane_clamped(fast::box_filter(f.as_plane(), radius, fast::Extreme::Max))
        }
        SeShape::Diamond { radius } => GrayImage::from_plane_clamped(fast::diamond_filter(
            f.as_plane(),
            radius,
            fast::Extreme::Max,
        )),
        _ => dilate(f, g),
    }
}
