use crate::error::{Error, Result};
use crate::linalg::{dense_phi_vector, DenseMatrix, LinearOperator, StateVector};
use crate::perfmodel::OpCounter;

use super::Attempt;

/// Relative size below which a new Arnoldi direction counts as zero.
const BREAKDOWN_TOL: f64 = 1e-14;

/// Arnoldi basis and Hessenberg matrix of a growing Krylov subspace.
#[derive(Debug, Clone)]
pub struct KrylovState {
    basis: Vec<StateVector>,
    h: DenseMatrix,
    beta: f64,
    m: usize,
    m_max: usize,
    invariant: bool,
}

impl KrylovState {
    /// Starts a subspace from `v`; charges one norm and one scaling.
    pub fn new(v: &[f64], m_max: usize, counter: &OpCounter) -> Result<Self> {
        if m_max == 0 {
            return Err(Error::InvalidRequest(
                "Krylov dimension cap must be positive".into(),
            ));
        }
        let beta = counter.norm(v)?;
        Self::with_norm(v, beta, m_max, counter)
    }

    fn with_norm(v: &[f64], beta: f64, m_max: usize, counter: &OpCounter) -> Result<Self> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::InvalidRequest(format!(
                "cannot start Krylov space from a vector of norm {beta}"
            )));
        }
        let v1 = counter.scale(1.0 / beta, v)?;
        Ok(Self {
            basis: vec![v1],
            h: DenseMatrix::zeros(m_max + 1, m_max),
            beta,
            m: 0,
            m_max,
            invariant: false,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of Hessenberg columns built so far.
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn max_dim(&self) -> usize {
        self.m_max
    }

    /// True once the subspace is invariant under the operator.
    pub fn is_invariant(&self) -> bool {
        self.invariant
    }

    pub fn basis(&self) -> &[StateVector] {
        &self.basis
    }

    /// Square `m x m` Hessenberg matrix.
    pub fn hessenberg(&self) -> DenseMatrix {
        self.h.block(0, 0, self.m.max(1), self.m.max(1))
    }

    /// Rectangular `(m+1) x m` Hessenberg matrix.
    pub fn hessenberg_extended(&self) -> DenseMatrix {
        self.h.block(0, 0, self.m + 1, self.m.max(1))
    }

    /// `h_{m+1,m}`.
    pub fn subdiagonal(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.h[(self.m, self.m - 1)]
        }
    }

    /// One Arnoldi step: modified Gram-Schmidt followed by one full
    /// reorthogonalization pass.
    pub fn extend<A: LinearOperator + ?Sized>(
        &mut self,
        op: &A,
        counter: &OpCounter,
    ) -> Result<()> {
        if self.m >= self.m_max || self.invariant {
            return Err(Error::KrylovCapExceeded(self.m_max));
        }
        let j = self.m;
        let mut w = op.apply(&self.basis[j], counter)?;
        for _pass in 0..2 {
            for (i, vi) in self.basis.iter().enumerate() {
                let hij = counter.dot(vi, &w)?;
                self.h[(i, j)] += hij;
                counter.axpy(-hij, vi, &mut w)?;
            }
        }
        let hn = counter.norm(&w)?;
        let col_norm = ((0..=j).map(|i| self.h[(i, j)].powi(2)).sum::<f64>() + hn * hn).sqrt();
        self.h[(j + 1, j)] = hn;
        self.m += 1;
        if hn <= BREAKDOWN_TOL * col_norm {
            self.invariant = true;
        } else {
            counter.scale_in_place(1.0 / hn, &mut w)?;
            self.basis.push(w);
        }
        Ok(())
    }
}

/// Free-function form of [`KrylovState::extend`].
pub fn arnoldi_extend<A: LinearOperator + ?Sized>(
    op: &A,
    state: &mut KrylovState,
    counter: &OpCounter,
) -> Result<()> {
    state.extend(op, counter)
}

/// One unsplit Krylov evaluation of `phi_p(sigma A) v`.
///
/// The generalized residual `beta sigma h_{m+1,m} |e_m^T phi_p(sigma H_m) e_1|`
/// is checked after every Arnoldi step.
pub(crate) fn attempt<A: LinearOperator + ?Sized>(
    op: &A,
    p: usize,
    sigma: f64,
    v: &[f64],
    tol: f64,
    m_max: usize,
    counter: &OpCounter,
) -> Result<Attempt> {
    let beta = counter.norm(v)?;
    if beta == 0.0 {
        return Ok(Attempt {
            y: Some(StateVector::zeros(v.len())),
            applies: 0,
            estimate: 0.0,
        });
    }
    let mut state = KrylovState::with_norm(v, beta, m_max, counter)?;
    let mut applies = 0;
    loop {
        state.extend(op, counter)?;
        applies += 1;
        let m = state.m;
        let hm = state.hessenberg().scaled(sigma);
        let mut e1 = vec![0.0; m];
        e1[0] = 1.0;
        let small = dense_phi_vector(&hm, p, &e1)?;
        let estimate = if state.invariant {
            0.0
        } else {
            beta * sigma * state.subdiagonal() * small[m - 1].abs()
        };
        if state.invariant || estimate <= tol {
            let coeffs: Vec<f64> = small.iter().map(|c| beta * c).collect();
            let vecs: Vec<&[f64]> = state.basis[..m].iter().map(|b| b.as_ref()).collect();
            let y = counter.lincomb(&coeffs, &vecs)?;
            return Ok(Attempt {
                y: Some(y),
                applies,
                estimate,
            });
        }
        if m == m_max || !estimate.is_finite() {
            return Ok(Attempt {
                y: None,
                applies,
                estimate,
            });
        }
    }
}
