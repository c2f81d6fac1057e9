//! Vectors, stencil operators, dense matrix functions and spectral bounds.

mod dense;
mod gershgorin;
mod stencil;

use std::ops::{Deref, DerefMut};

pub use dense::{
    dense_expm, dense_expm_with_cap, dense_phi, dense_phi_vector, DenseMatrix, DEFAULT_DIM_CAP,
};
pub(crate) use gershgorin::bounds_from_rows;
pub use gershgorin::{gershgorin_bounds, GershgorinRows, SpectralBounds};
pub use stencil::{apply_operator, build_advdiff_operator, StencilOperator1D};

use crate::error::{Error, Result};
use crate::perfmodel::OpCounter;

/// Flat state vector. Always non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyState);
        }
        Ok(Self(data))
    }

    pub fn zeros(len: usize) -> Self {
        debug_assert!(len > 0);
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Uncounted Euclidean norm, for diagnostics and tests.
    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(data: Vec<f64>) -> Self {
        debug_assert!(!data.is_empty());
        Self(data)
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl AsRef<[f64]> for StateVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Uncounted Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Matrix-free linear operator whose applications are charged to a counter.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], counter: &OpCounter) -> Result<StateVector>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], counter: &OpCounter) -> Result<StateVector> {
        (**self).apply(x, counter)
    }
}

/// Builds the dense matrix of an operator column by column.
pub fn densify<A: LinearOperator + ?Sized>(op: &A, counter: &OpCounter) -> Result<DenseMatrix> {
    let n = op.dim();
    let mut m = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.apply(&e, counter)?;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    Ok(m)
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    /// Charged as one matvec; only used for small test operators.
    fn apply(&self, x: &[f64], counter: &OpCounter) -> Result<StateVector> {
        if x.len() != self.cols() {
            return Err(Error::LengthMismatch {
                expected: self.cols(),
                actual: x.len(),
            });
        }
        counter.record(crate::perfmodel::Primitive::Matvec)?;
        Ok(StateVector::from(self.mul_vec(x)))
    }
}
