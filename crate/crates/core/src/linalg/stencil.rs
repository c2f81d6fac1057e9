use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, GershgorinRows, LinearOperator, StateVector};
use crate::perfmodel::{OpCounter, Primitive};

/// Centered second-order discretization of `kappa(x) u_xx - u_x` on the
/// interior points of `[0, 1]` with homogeneous Dirichlet boundaries.
///
/// The operator stores `L = -(A_h + B_h)`, so `u' = L u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator1D {
    n: usize,
    h: f64,
    kappa: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

/// Assembles the advection-diffusion operator for `n` interior points,
/// sampling `kappa_fn` at `x_i = i h`, `h = 1/(n+1)`.
pub fn build_advdiff_operator(
    n: usize,
    kappa_fn: impl Fn(f64) -> f64,
) -> Result<StencilOperator1D> {
    if n < 1 {
        return Err(Error::GridTooSmall { min: 1, got: n });
    }
    let h = 1.0 / (n as f64 + 1.0);
    let kappa = (1..=n).map(|i| kappa_fn(i as f64 * h)).collect();
    StencilOperator1D::from_kappa(n, kappa)
}

pub fn apply_operator(
    op: &StencilOperator1D,
    u: &[f64],
    counter: &OpCounter,
) -> Result<StateVector> {
    op.apply(u, counter)
}

impl StencilOperator1D {
    pub fn from_kappa(n: usize, kappa: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::GridTooSmall { min: 1, got: n });
        }
        if kappa.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: kappa.len(),
            });
        }
        let h = 1.0 / (n as f64 + 1.0);
        if let Some((i, &k)) = kappa
            .iter()
            .enumerate()
            .find(|(_, k)| !(**k > 0.0) || !k.is_finite())
        {
            return Err(Error::NonPositiveKappa {
                x: (i + 1) as f64 * h,
                value: k,
            });
        }
        let adv = 1.0 / (2.0 * h);
        let h2 = h * h;
        let mut sub = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        let mut sup = Vec::with_capacity(n);
        for (i, &k) in kappa.iter().enumerate() {
            let d = k / h2;
            // neighbours outside the interior are boundary values (zero)
            sub.push(if i > 0 { d + adv } else { 0.0 });
            diag.push(-2.0 * d);
            sup.push(if i + 1 < n { d - adv } else { 0.0 });
        }
        Ok(Self {
            n,
            h,
            kappa,
            sub,
            diag,
            sup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// `(sub, diag, super)` coefficients of row `i`; out-of-range neighbours are zero.
    pub fn row(&self, i: usize) -> (f64, f64, f64) {
        (self.sub[i], self.diag[i], self.sup[i])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n;
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i > 0 {
                m[(i, i - 1)] = self.sub[i];
            }
            if i + 1 < n {
                m[(i, i + 1)] = self.sup[i];
            }
        }
        m
    }

    /// Same stencil applied without touching any counter.
    pub fn apply_uncounted(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * u[i];
            if i > 0 {
                acc += self.sub[i] * u[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * u[i + 1];
            }
            y[i] = acc;
        }
        y
    }
}

impl LinearOperator for StencilOperator1D {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], counter: &OpCounter) -> Result<StateVector> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        counter.record(Primitive::Matvec)?;
        Ok(StateVector::from(self.apply_uncounted(x)))
    }
}

impl GershgorinRows for StencilOperator1D {
    fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        (0..self.n)
            .map(|i| (self.diag[i], self.sub[i].abs() + self.sup[i].abs()))
            .collect()
    }
}
