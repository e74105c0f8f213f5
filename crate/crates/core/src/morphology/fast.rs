//! Flat square and diamond filters in O(1) amortized work per pixel.
//!
//! Windows are clipped to the image, which is the same as padding with the
//! neutral element of the extreme being taken.

use std::collections::VecDeque;

use crate::image::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extreme {
    Min,
    Max,
}

impl Extreme {
    #[inline]
    fn beats(self, a: f64, b: f64) -> bool {
        match self {
            Extreme::Min => a <= b,
            Extreme::Max => a >= b,
        }
    }

    fn neutral(self) -> f64 {
        match self {
            Extreme::Min => f64::INFINITY,
            Extreme::Max => f64::NEG_INFINITY,
        }
    }
}

/// `out[i] = extreme(line[i-r ..= i+r])`, clipped at both ends.
fn sliding(line: &[f64], r: usize, op: Extreme, out: &mut [f64]) {
    let n = line.len();
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for i in 0..n {
        let hi = (i + r).min(n - 1);
        while next <= hi {
            while let Some(&back) = dq.back() {
                if op.beats(line[next], line[back]) {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        while let Some(&front) = dq.front() {
            if front + r < i {
                dq.pop_front();
            } else {
                break;
            }
        }
        out[i] = line[*dq.front().expect("window is never empty")];
    }
}

fn separable(data: &[f64], w: usize, h: usize, r: usize, op: Extreme) -> Vec<f64> {
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        sliding(&data[y * w..(y + 1) * w], r, op, &mut rows[y * w..(y + 1) * w]);
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h];
    let mut res = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = rows[y * w + x];
        }
        sliding(&col, r, op, &mut res);
        for y in 0..h {
            out[y * w + x] = res[y];
        }
    }
    out
}

pub(crate) fn box_filter(p: &Plane, r: usize, op: Extreme) -> Plane {
    let (w, h) = (p.width(), p.height());
    Plane::new(w, h, separable(p.data(), w, h, r, op)).expect("shape preserved")
}

/// Extreme over the L1 ball `|dx| + |dy| <= r`.
///
/// In the rotated coordinates `u = x + y`, `v = x - y + (h - 1)` the L1 ball
/// becomes a Chebyshev square; cells with no source pixel hold the neutral
/// value.
pub(crate) fn diamond_filter(p: &Plane, r: usize, op: Extreme) -> Plane {
    let (w, h) = (p.width(), p.height());
    let m = w + h - 1;
    let mut grid = vec![op.neutral(); m * m];
    for y in 0..h {
        for x in 0..w {
            let (u, v) = (x + y, x + h - 1 - y);
            grid[v * m + u] = p.get(x, y);
        }
    }
    let filtered = separable(&grid, m, m, r, op);
    Plane::from_fn(w, h, |x, y| {
        let (u, v) = (x + y, x + h - 1 - y);
        filtered[v * m + u]
    })
}
