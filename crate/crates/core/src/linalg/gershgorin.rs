use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Axis-aligned box in the complex plane containing an operator's spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub real_min: f64,
    pub real_max: f64,
    pub imag_halfwidth: f64,
}

impl SpectralBounds {
    pub fn new(real_min: f64, real_max: f64, imag_halfwidth: f64) -> Result<Self> {
        let ok = real_min.is_finite()
            && real_max.is_finite()
            && imag_halfwidth.is_finite()
            && real_min <= real_max
            && imag_halfwidth >= 0.0;
        if !ok {
            return Err(Error::InvalidBounds(format!(
                "[{real_min}, {real_max}] x ±{imag_halfwidth}"
            )));
        }
        Ok(Self {
            real_min,
            real_max,
            imag_halfwidth,
        })
    }

    /// Midpoint of the real extent.
    pub fn center(&self) -> f64 {
        0.5 * (self.real_min + self.real_max)
    }

    /// A quarter of the real extent; maps `[-2, 2]` onto `[real_min, real_max]`.
    pub fn quarter_width(&self) -> f64 {
        0.25 * (self.real_max - self.real_min)
    }

    /// Smallest box that also contains the origin.
    pub fn including_origin(&self) -> Self {
        Self {
            real_min: self.real_min.min(0.0),
            real_max: self.real_max.max(0.0),
            imag_halfwidth: self.imag_halfwidth,
        }
    }

    pub fn contains(&self, re: f64, im: f64, slack: f64) -> bool {
        re >= self.real_min - slack
            && re <= self.real_max + slack
            && im.abs() <= self.imag_halfwidth + slack
    }
}

/// Row-wise Gershgorin data: `(diagonal entry, off-diagonal absolute row sum)`.
pub trait GershgorinRows {
    fn gershgorin_rows(&self) -> Vec<(f64, f64)>;
}

/// Bounding box of all Gershgorin discs.
pub fn gershgorin_bounds<G: GershgorinRows + ?Sized>(op: &G) -> SpectralBounds {
    bounds_from_rows(op.gershgorin_rows())
}

pub(crate) fn bounds_from_rows(rows: impl IntoIterator<Item = (f64, f64)>) -> SpectralBounds {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut im = 0.0_f64;
    for (d, r) in rows {
        lo = lo.min(d - r);
        hi = hi.max(d + r);
        im = im.max(r);
    }
    if lo > hi {
        // no rows
        lo = 0.0;
        hi = 0.0;
    }
    SpectralBounds {
        real_min: lo,
        real_max: hi,
        imag_halfwidth: im,
    }
}

impl GershgorinRows for DenseMatrix {
    fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        (0..self.rows())
            .map(|i| {
                let row = self.row(i);
                let r: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, x)| x.abs())
                    .sum();
                (row[i], r)
            })
            .collect()
    }
}
