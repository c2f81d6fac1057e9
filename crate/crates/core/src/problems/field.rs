use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Scalar field on the periodic `n x n` grid.
///
/// Values are stored row by row: row `j` holds the points with `y = j h`
/// and column `i` the points with `x = i h`, so the flat index is `j n + i`
/// and `x` is the fast axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2DField {
    n: usize,
    values: Vec<f64>,
}

impl Grid2DField {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at column `i` (x) and row `j` (y); indices wrap periodically.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.values[grid_index(self.n, i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `n` lines of `n` comma-separated values, first line `y = 0`.
    pub fn write_csv_to(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.values.chunks(self.n) {
            wr.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }
}

/// Flat index of column `i`, row `j` with periodic wrap-around.
pub fn grid_index(n: usize, i: isize, j: isize) -> usize {
    let n_i = n as isize;
    (j.rem_euclid(n_i) * n_i + i.rem_euclid(n_i)) as usize
}
