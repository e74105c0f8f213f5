//! Separable 2D discrete wavelet transform (Mallat algorithm).
//!
//! One analysis level filters the rows with the low/highpass pair and keeps
//! the even-indexed outputs, then does the same along the columns, giving
//! four subbands of size `ceil(n / 2)` per axis. Every filter is centred
//! inside a common support of even length `L`; output `i` reads the input
//! around sample `2i` (see [`WaveletFilterBank::analysis_phase`]).

mod filters;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use std::path::{Path, PathBuf};

use crate::dataio::save_pgm;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Plane};

/// Supported wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveletFamily {
    Biorthogonal3_7,
    Daubechies8,
    Symlet8,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 3] = [
        WaveletFamily::Biorthogonal3_7,
        WaveletFamily::Daubechies8,
        WaveletFamily::Symlet8,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            WaveletFamily::Biorthogonal3_7 => "bior3.7",
            WaveletFamily::Daubechies8 => "db8",
            WaveletFamily::Symlet8 => "sym8",
        }
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, WaveletFamily::Biorthogonal3_7)
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bior3.7" | "biorthogonal3_7" => Ok(WaveletFamily::Biorthogonal3_7),
            "db8" | "daubechies8" => Ok(WaveletFamily::Daubechies8),
            "sym8" | "symlet8" => Ok(WaveletFamily::Symlet8),
            _ => Err(Error::UnknownName {
                kind: "wavelet family",
                name: s.to_string(),
                expected: "bior3.7, db8, sym8".into(),
            }),
        }
    }
}

/// Analysis and synthesis low/highpass filters, convolution orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilterBank {
    pub family: WaveletFamily,
    pub analysis_lowpass: Vec<f64>,
    pub analysis_highpass: Vec<f64>,
    pub synthesis_lowpass: Vec<f64>,
    pub synthesis_highpass: Vec<f64>,
}

const COEFF_TOL: f64 = 1e-10;

impl WaveletFilterBank {
    fn from_lowpass(family: WaveletFamily, analysis_lowpass: Vec<f64>, synthesis_lowpass: Vec<f64>) -> Self {
        let len = analysis_lowpass.len().max(synthesis_lowpass.len());
        let dec = centre(&analysis_lowpass, len);
        let rec = centre(&synthesis_lowpass, len);
        // quadrature-mirror relations on the common support
        let synthesis_highpass: Vec<f64> = dec
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { *v } else { -v })
            .collect();
        let analysis_highpass: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { -v } else { *v })
            .collect();
        WaveletFilterBank {
            family,
            analysis_lowpass,
            analysis_highpass: trim(analysis_highpass),
            synthesis_lowpass,
            synthesis_highpass: trim(synthesis_highpass),
        }
    }

    /// Checks the coefficient invariants of the family.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidArgument(format!("{} bank: {what}", self.family)));
        let hi_sum: f64 = self.analysis_highpass.iter().sum();
        if hi_sum.abs() > COEFF_TOL {
            return fail(format!("analysis highpass sums to {hi_sum}"));
        }
        let lo_sum: f64 = self.analysis_lowpass.iter().sum();
        if (lo_sum - std::f64::consts::SQRT_2).abs() > COEFF_TOL {
            return fail(format!("analysis lowpass sums to {lo_sum}"));
        }
        if self.family.is_orthogonal() {
            let energy: f64 = self.analysis_lowpass.iter().map(|v| v * v).sum();
            if (energy - 1.0).abs() > COEFF_TOL {
                return fail(format!("lowpass energy {energy}"));
            }
            let reversed: Vec<f64> = self.analysis_lowpass.iter().rev().copied().collect();
            if reversed != self.synthesis_lowpass {
                return fail("synthesis lowpass is not the reversed analysis lowpass".into());
            }
            let reversed_hi: Vec<f64> = self.analysis_highpass.iter().rev().copied().collect();
            if reversed_hi != self.synthesis_highpass {
                return fail("synthesis highpass is not the reversed analysis highpass".into());
            }
        }
        Ok(())
    }

    /// Even decimation phase `P` placing the centroid of the analysis
    /// lowpass over output sample `i` at input position `2i + 1/2`, so
    /// subbands stay registered with the image at every level.
    pub fn analysis_phase(&self) -> isize {
        let len = self.support();
        let h = centre(&self.analysis_lowpass, len);
        let centroid = h.iter().enumerate().map(|(k, v)| k as f64 * v).sum::<f64>()
            / h.iter().sum::<f64>();
        2 * ((centroid + 0.5) / 2.0).round() as isize
    }

    /// Longest filter length; every filter is centred inside this support.
    pub fn support(&self) -> usize {
        [
            &self.analysis_lowpass,
            &self.analysis_highpass,
            &self.synthesis_lowpass,
            &self.synthesis_highpass,
        ]
        .iter()
        .map(|f| f.len())
        .max()
        .unwrap_or(0)
    }
}

/// Zero-pads `f` symmetrically to length `len`.
fn centre(f: &[f64], len: usize) -> Vec<f64> {
    let pad = (len - f.len()) / 2;
    let mut out = vec![0.0; len];
    out[pad..pad + f.len()].copy_from_slice(f);
    out
}

/// Drops symmetric runs of exact zeros from both ends.
fn trim(mut f: Vec<f64>) -> Vec<f64> {
    while f.len() > 2 && f[0] == 0.0 && f[f.len() - 1] == 0.0 {
        f.remove(0);
        f.pop();
    }
    f
}

/// Filter bank for `family`, validated against its invariants.
pub fn filter_bank(family: WaveletFamily) -> Result<WaveletFilterBank> {
    let bank = match family {
        WaveletFamily::Daubechies8 => {
            let rec = filters::DB8_SCALING.to_vec();
            let dec = rec.iter().rev().copied().collect();
            WaveletFilterBank::from_lowpass(family, dec, rec)
        }
        WaveletFamily::Symlet8 => {
            let dec = filters::SYM8_ANALYSIS.to_vec();
            let rec = dec.iter().rev().copied().collect();
            WaveletFilterBank::from_lowpass(family, dec, rec)
        }
        WaveletFamily::Biorthogonal3_7 => WaveletFilterBank::from_lowpass(
            family,
            filters::bior37_analysis(),
            filters::bior37_synthesis(),
        ),
    };
    bank.validate()?;
    Ok(bank)
}

/// Signal extension used beyond the image border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMode {
    /// Half-sample symmetric: `x[-1] = x[0]`, `x[n] = x[n-1]`.
    Symmetric,
    /// Wrap-around; perfect reconstruction holds exactly for even sizes.
    Periodic,
}

impl BoundaryMode {
    #[inline]
    fn index(self, i: isize, n: usize) -> usize {
        let n_i = n as isize;
        match self {
            BoundaryMode::Periodic => i.rem_euclid(n_i) as usize,
            BoundaryMode::Symmetric => {
                let m = i.rem_euclid(2 * n_i);
                if m < n_i {
                    m as usize
                } else {
                    (2 * n_i - 1 - m) as usize
                }
            }
        }
    }
}

/// Orientation of a detail subband.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subband {
    /// Lowpass along x, highpass along y (horizontal edges, "HL").
    Horizontal,
    /// Highpass along x, lowpass along y (vertical edges, "LH").
    Vertical,
    /// Highpass along both axes ("HH").
    Diagonal,
    /// Lowpass along both axes ("LL").
    Approximation,
}

impl Subband {
    pub fn tag(self) -> &'static str {
        match self {
            Subband::Horizontal => "HL",
            Subband::Vertical => "LH",
            Subband::Diagonal => "HH",
            Subband::Approximation => "LL",
        }
    }
}

/// The four outputs of one analysis level.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub approximation: Plane,
    pub horizontal: Plane,
    pub vertical: Plane,
    pub diagonal: Plane,
    pub level: usize,
}

impl SubbandSet {
    pub fn get(&self, band: Subband) -> &Plane {
        match band {
            Subband::Horizontal => &self.horizontal,
            Subband::Vertical => &self.vertical,
            Subband::Diagonal => &self.diagonal,
            Subband::Approximation => &self.approximation,
        }
    }
}

struct Kernels {
    dec_lo: Vec<f64>,
    dec_hi: Vec<f64>,
    rec_lo: Vec<f64>,
    rec_hi: Vec<f64>,
    len: usize,
    phase: isize,
}

impl Kernels {
    fn new(bank: &WaveletFilterBank) -> Self {
        let len = bank.support();
        Kernels {
            dec_lo: centre(&bank.analysis_lowpass, len),
            dec_hi: centre(&bank.analysis_highpass, len),
            rec_lo: centre(&bank.synthesis_lowpass, len),
            rec_hi: centre(&bank.synthesis_highpass, len),
            len,
            phase: bank.analysis_phase(),
        }
    }

    /// Analysis phase `P`: output `i` is the convolution at `2i + P`.
    fn phase(&self) -> isize {
        self.phase
    }
}

/// 1D analysis of one line into (low, high) halves.
fn analyze_line(x: &[f64], k: &Kernels, mode: BoundaryMode, lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len();
    let p = k.phase();
    for i in 0..lo.len() {
        let base = 2 * i as isize + p;
        let (mut a, mut d) = (0.0, 0.0);
        for t in 0..k.len {
            let v = x[mode.index(base - t as isize, n)];
            a += k.dec_lo[t] * v;
            d += k.dec_hi[t] * v;
        }
        lo[i] = a;
        hi[i] = d;
    }
}

/// 1D synthesis (periodic) of one line from (low, high) halves.
fn synthesize_line(lo: &[f64], hi: &[f64], k: &Kernels, out: &mut [f64]) {
    let n = out.len();
    // overall delay of analysis + synthesis is len - 1
    let q = k.len as isize - 1 - k.phase();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..lo.len() {
        for t in 0..k.len {
            // n_out - 2i + q = t
            let pos = (t as isize + 2 * i as isize - q).rem_euclid(n as isize) as usize;
            out[pos] += lo[i] * k.rec_lo[t] + hi[i] * k.rec_hi[t];
        }
    }
}

fn half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Applies `f` to every row, producing two planes of width `half(w)`.
fn split_rows(
    p: &Plane,
    k: &Kernels,
    mode: BoundaryMode,
) -> (Plane, Plane) {
    let (w, h) = (p.width(), p.height());
    let hw = half(w);
    let mut lo = vec![0.0; hw * h];
    let mut hi = vec![0.0; hw * h];
    for y in 0..h {
        analyze_line(
            p.row(y),
            k,
            mode,
            &mut lo[y * hw..(y + 1) * hw],
            &mut hi[y * hw..(y + 1) * hw],
        );
    }
    (
        Plane::new(hw, h, lo).expect("shape"),
        Plane::new(hw, h, hi).expect("shape"),
    )
}

fn split_cols(p: &Plane, k: &Kernels, mode: BoundaryMode) -> (Plane, Plane) {
    let (lo, hi) = split_rows(&p.transpose(), k, mode);
    (lo.transpose(), hi.transpose())
}

/// One analysis level with half-sample symmetric extension.
pub fn analyze_level(img: &Plane, bank: &WaveletFilterBank) -> Result<SubbandSet> {
    analyze_level_with(img, bank, BoundaryMode::Symmetric)
}

pub fn analyze_level_with(
    img: &Plane,
    bank: &WaveletFilterBank,
    mode: BoundaryMode,
) -> Result<SubbandSet> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::Dimensions(format!(
            "wavelet analysis needs both axes >= 2, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let k = Kernels::new(bank);
    let (low_x, high_x) = split_rows(img, &k, mode);
    let (approximation, horizontal) = split_cols(&low_x, &k, mode);
    let (vertical, diagonal) = split_cols(&high_x, &k, mode);
    Ok(SubbandSet {
        approximation,
        horizontal,
        vertical,
        diagonal,
        level: 1,
    })
}

/// Inverse of [`analyze_level_with`] under periodic extension.
///
/// Produces an image of twice the subband size on each axis.
pub fn synthesize_level(subbands: &SubbandSet, bank: &WaveletFilterBank) -> Result<Plane> {
    let (w, h) = (subbands.approximation.width(), subbands.approximation.height());
    for band in [&subbands.horizontal, &subbands.vertical, &subbands.diagonal] {
        if band.width() != w || band.height() != h {
            return Err(Error::Dimensions(format!(
                "subband {}x{} does not match approximation {w}x{h}",
                band.width(),
                band.height()
            )));
        }
    }
    let k = Kernels::new(bank);
    let merge_cols = |lo: &Plane, hi: &Plane| -> Plane {
        // columns: operate on transposed rows
        let (lt, ht) = (lo.transpose(), hi.transpose());
        let mut out = vec![0.0; lt.height() * 2 * lt.width()];
        let ow = 2 * lt.width();
        for y in 0..lt.height() {
            synthesize_line(lt.row(y), ht.row(y), &k, &mut out[y * ow..(y + 1) * ow]);
        }
        Plane::new(ow, lt.height(), out).expect("shape").transpose()
    };
    let low_x = merge_cols(&subbands.approximation, &subbands.horizontal);
    let high_x = merge_cols(&subbands.vertical, &subbands.diagonal);
    let ow = 2 * w;
    let oh = low_x.height();
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        synthesize_line(low_x.row(y), high_x.row(y), &k, &mut out[y * ow..(y + 1) * ow]);
    }
    Plane::new(ow, oh, out)
}

/// Multi-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Finest level first; only the last level's approximation is a
    /// retained component.
    pub levels: Vec<SubbandSet>,
}

impl Decomposition {
    /// Components in feature order: for each level the horizontal,
    /// vertical and diagonal details, then the final approximation.
    pub fn components(&self) -> Vec<(usize, Subband, &Plane)> {
        let mut out = Vec::with_capacity(3 * self.levels.len() + 1);
        for s in &self.levels {
            for band in [Subband::Horizontal, Subband::Vertical, Subband::Diagonal] {
                out.push((s.level, band, s.get(band)));
            }
        }
        if let Some(last) = self.levels.last() {
            out.push((last.level, Subband::Approximation, &last.approximation));
        }
        out
    }

    pub fn component_count(&self) -> usize {
        3 * self.levels.len() + 1
    }
}

/// Component order of an `levels`-deep decomposition.
pub fn component_layout(levels: usize) -> Vec<(usize, Subband)> {
    let mut out = Vec::with_capacity(3 * levels + 1);
    for level in 1..=levels {
        for band in [Subband::Horizontal, Subband::Vertical, Subband::Diagonal] {
            out.push((level, band));
        }
    }
    if levels > 0 {
        out.push((levels, Subband::Approximation));
    }
    out
}

/// Recursive analysis of the approximation, `levels` times.
pub fn decompose(img: &Plane, bank: &WaveletFilterBank, levels: usize) -> Result<Decomposition> {
    decompose_with(img, bank, levels, BoundaryMode::Symmetric)
}

pub fn decompose_with(
    img: &Plane,
    bank: &WaveletFilterBank,
    levels: usize,
    mode: BoundaryMode,
) -> Result<Decomposition> {
    if levels == 0 {
        return Err(Error::InvalidArgument("decomposition needs at least one level".into()));
    }
    let min_side = 1usize << levels;
    if img.width() < min_side || img.height() < min_side {
        return Err(Error::Dimensions(format!(
            "{}x{} image is too small for {levels} levels (needs {min_side}x{min_side})",
            img.width(),
            img.height()
        )));
    }
    let mut out = Vec::with_capacity(levels);
    let mut source = img.clone();
    for level in 1..=levels {
        let mut set = analyze_level_with(&source, bank, mode)?;
        set.level = level;
        source = set.approximation.clone();
        out.push(set);
    }
    Ok(Decomposition { levels: out })
}

/// Writes every component as `<prefix>_L<level>_<tag>.pgm` in `dir`.
///
/// Each component is linearly rescaled to [0, 1] for viewing only.
pub fn dump_components(
    decomposition: &Decomposition,
    dir: impl AsRef<Path>,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (level, band, plane) in decomposition.components() {
        let (lo, hi) = plane.min_max();
        let span = hi - lo;
        let scaled = plane.map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 });
        let path = dir.join(format!("{prefix}_L{level}_{}.pgm", band.tag()));
        save_pgm(&GrayImage::from_plane_clamped(scaled), &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests;
