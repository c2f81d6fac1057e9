//! Actions of `exp` and the phi-functions on vectors.
//!
//! Two matrix-free backends are provided: Arnoldi-based Krylov projection and
//! Newton interpolation at real Leja points. When a single unsplit evaluation
//! does not converge, the interval `[0, tau]` is split into `s` equal
//! substeps (`s = 2, 4, ...`) and the exponential of an augmented operator is
//! chained across them.

mod krylov;
mod leja;

use std::sync::Arc;

pub use krylov::{arnoldi_extend, KrylovState};
pub use leja::{
    default_leja_points, divided_differences, divided_differences_exp, generate_leja_points,
    LejaSequence, DEFAULT_GRID_RESOLUTION, DEFAULT_LEJA_POINTS,
};

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, SpectralBounds, StateVector};
use crate::perfmodel::OpCounter;
use leja::DdCache;

/// Highest phi index supported by the evaluators.
pub const MAX_PHI_INDEX: usize = 3;

/// Default cap on the scaled spectral interval of one Leja interpolation,
/// a quarter-width of 10 in the units of the Leja points.
pub const DEFAULT_LEJA_MAX_WIDTH: f64 = 40.0;

/// Outcome of one unsplit evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Attempt {
    pub y: Option<StateVector>,
    pub applies: usize,
    pub estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Krylov,
    Leja,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Krylov => "krylov",
            Backend::Leja => "leja",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiConfig {
    pub krylov_max_dim: usize,
    /// Leja points used per substep; at most the length of the sequence.
    pub leja_points: usize,
    pub max_substeps: usize,
    /// Largest length of the real spectral interval, scaled by the substep
    /// size, that one Leja interpolation may cover. Longer intervals are
    /// split into substeps up front.
    pub leja_max_width: f64,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self {
            krylov_max_dim: 100,
            leja_points: DEFAULT_LEJA_POINTS,
            max_substeps: 1024,
            leja_max_width: DEFAULT_LEJA_MAX_WIDTH,
        }
    }
}

/// Request for `phi_p(tau A) v`.
#[derive(Debug, Clone, Copy)]
pub struct PhiActionRequest<'a> {
    pub p: usize,
    pub tau: f64,
    pub v: &'a [f64],
    /// Absolute accuracy target in the Euclidean norm.
    pub tol: f64,
    /// Spectral box of `A`; required by the Leja backend.
    pub bounds: Option<SpectralBounds>,
}

impl PhiActionRequest<'_> {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.p > MAX_PHI_INDEX {
            return Err(Error::UnsupportedPhi(self.p));
        }
        validate_common(self.tau, self.tol, dim)?;
        if self.v.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: self.v.len(),
            });
        }
        Ok(())
    }
}

fn validate_common(tau: f64, tol: f64, dim: usize) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidRequest(format!(
            "step size must be positive, got {tau}"
        )));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidRequest(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if dim == 0 {
        return Err(Error::EmptyState);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PhiActionResult {
    pub y: StateVector,
    /// Operator applications charged during the call, failed attempts included.
    pub iterations: usize,
    /// Substeps of the successful pass (1 when no splitting was needed).
    pub substeps: usize,
    pub converged: bool,
    /// Sum of the termination estimates over the substeps of the last pass.
    pub error_estimate: f64,
}

/// Phi-function evaluator holding configuration, Leja points and a cache of
/// divided differences.
///
/// The cache uses interior mutability, so an evaluator must stay on one
/// thread; create one per worker.
#[derive(Debug)]
pub struct PhiEvaluator {
    config: PhiConfig,
    leja: Arc<LejaSequence>,
    cache: DdCache,
}

impl Default for PhiEvaluator {
    fn default() -> Self {
        Self::new(PhiConfig::default())
    }
}

impl PhiEvaluator {
    pub fn new(config: PhiConfig) -> Self {
        Self::with_leja_points(config, default_leja_points())
    }

    pub fn with_leja_points(config: PhiConfig, leja: Arc<LejaSequence>) -> Self {
        Self {
            config,
            leja,
            cache: DdCache::default(),
        }
    }

    pub fn config(&self) -> &PhiConfig {
        &self.config
    }

    pub fn leja_sequence(&self) -> &LejaSequence {
        &self.leja
    }

    fn leja_budget(&self) -> &[f64] {
        let k = self.config.leja_points.min(self.leja.count());
        &self.leja.points()[..k]
    }

    pub fn krylov_phi_action<A: LinearOperator + ?Sized>(
        &self,
        op: &A,
        req: &PhiActionRequest<'_>,
        counter: &OpCounter,
    ) -> Result<PhiActionResult> {
        self.phi_action(op, req, Backend::Krylov, counter)
    }

    pub fn leja_phi_action<A: LinearOperator + ?Sized>(
        &self,
        op: &A,
        req: &PhiActionRequest<'_>,
        counter: &OpCounter,
    ) -> Result<PhiActionResult> {
        self.phi_action(op, req, Backend::Leja, counter)
    }

    /// `phi_p(tau A) v` with the chosen backend.
    pub fn phi_action<A: LinearOperator + ?Sized>(
        &self,
        op: &A,
        req: &PhiActionRequest<'_>,
        backend: Backend,
        counter: &OpCounter,
    ) -> Result<PhiActionResult> {
        req.validate(op.dim())?;
        let bounds = require_bounds(backend, req.bounds)?;
        let first = self.first_substeps(req.tau, bounds.as_ref(), backend);
        let mut iterations = 0;
        if first == 1 {
            let direct = self.attempt(
                op,
                req.p,
                req.tau,
                req.v,
                req.tol,
                bounds.as_ref(),
                backend,
                counter,
            )?;
            iterations = direct.applies;
            if let Some(y) = direct.y {
                return Ok(PhiActionResult {
                    y,
                    iterations,
                    substeps: 1,
                    converged: true,
                    error_estimate: direct.estimate,
                });
            }
        }
        // phi_p(tau A) v = tau^{-p} * (tau^p phi_p(tau A) v)
        let scale = req.tau.powi(req.p as i32);
        let mut ws: Vec<Option<&[f64]>> = vec![None; req.p + 1];
        ws[req.p] = Some(req.v);
        let mut res = self.substepped(
            op,
            req.tau,
            &ws,
            req.tol * scale,
            bounds.as_ref(),
            backend,
            counter,
        )?;
        iterations += res.iterations;
        if req.p > 0 {
            counter.scale_in_place(1.0 / scale, &mut res.y)?;
        }
        res.iterations = iterations;
        res.error_estimate /= scale;
        Ok(res)
    }

    /// `sum_p tau^p phi_p(tau J) w_p` in one augmented evaluation.
    ///
    /// Indices must be distinct and lie in `1..=3`. The tolerance applies to
    /// the combined result.
    #[allow(clippy::too_many_arguments)]
    pub fn phi_linear_combination<A: LinearOperator + ?Sized>(
        &self,
        op: &A,
        tau: f64,
        terms: &[(usize, &[f64])],
        tol: f64,
        bounds: Option<SpectralBounds>,
        backend: Backend,
        counter: &OpCounter,
    ) -> Result<PhiActionResult> {
        let n = op.dim();
        validate_common(tau, tol, n)?;
        if terms.is_empty() {
            return Err(Error::EmptyCombination);
        }
        let q = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mut ws: Vec<Option<&[f64]>> = vec![None; q + 1];
        for &(p, w) in terms {
            if p == 0 || p > MAX_PHI_INDEX {
                return Err(Error::UnsupportedPhi(p));
            }
            if ws[p].is_some() {
                return Err(Error::InvalidRequest(format!("phi index {p} given twice")));
            }
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: w.len(),
                });
            }
            ws[p] = Some(w);
        }
        let bounds = require_bounds(backend, bounds)?;
        self.substepped(op, tau, &ws, tol, bounds.as_ref(), backend, counter)
    }

    /// Substep count to start from: 1, or for Leja the power of two that
    /// brings the scaled interval length within `leja_max_width`.
    fn first_substeps(&self, tau: f64, bounds: Option<&SpectralBounds>, backend: Backend) -> usize {
        match (backend, bounds) {
            (Backend::Leja, Some(b)) => {
                let ratio = tau * (b.real_max - b.real_min) / self.config.leja_max_width;
                let mut s = 1;
                while (s as f64) < ratio && s < self.config.max_substeps {
                    s *= 2;
                }
                s
            }
            _ => 1,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn attempt<A: LinearOperator + ?Sized>(
        &self,
        op: &A,
        p: usize,
        sigma: f64,
        v: &[f64],
        tol: f64,
        bounds: Option<&SpectralBounds>,
        backend: Backend,
        counter: &OpCounter,
    ) -> Result<Attempt> {
        match backend {
            Backend::Krylov => {
                krylov::attempt(op, p, sigma, v, tol, self.config.krylov_max_dim, counter)
            }
            Backend::Leja => {
                let b = bounds.ok_or_else(|| {
                    Error::InvalidRequest("Leja backend needs spectral bounds".into())
                })?;
                leja::attempt(
                    op,
                    p,
                    sigma,
                    v,
                    tol,
                    b,
                    self.leja_budget(),
                    &self.cache,
                    counter,
                )
            }
        }
    }

    /// Chains `exp((tau/s) B)` over `s` substeps, where `B` is the augmented
    /// operator carrying `w_1..w_q`, doubling `s` until every substep
    /// converges to `tol / s`.
    #[allow(clippy::too_many_arguments)]
    fn substepped<A: LinearOperator + ?Sized>(
        &self,
        op: &A,
        tau: f64,
        ws: &[Option<&[f64]>],
        tol: f64,
        bounds: Option<&SpectralBounds>,
        backend: Backend,
        counter: &OpCounter,
    ) -> Result<PhiActionResult> {
        let n = op.dim();
        let aug = match Augmented::new(op, ws, counter)? {
            Some(a) => a,
            None => {
                return Ok(PhiActionResult {
                    y: StateVector::zeros(n),
                    iterations: 0,
                    substeps: 1,
                    converged: true,
                    error_estimate: 0.0,
                })
            }
        };
        let start = aug.initial_vector(ws.first().copied().flatten());
        let aug_bounds = bounds.map(SpectralBounds::including_origin);
        let mut iterations = 0;
        let mut s = self.first_substeps(tau, aug_bounds.as_ref(), backend);
        let mut last_estimate = f64::INFINITY;
        while s <= self.config.max_substeps {
            let sigma = tau / s as f64;
            let sub_tol = tol / s as f64;
            let mut x = start.clone();
            let mut total_estimate = 0.0;
            let mut ok = true;
            for _ in 0..s {
                let att = self.attempt(
                    &aug,
                    0,
                    sigma,
                    &x,
                    sub_tol,
                    aug_bounds.as_ref(),
                    backend,
                    counter,
                )?;
                iterations += att.applies;
                last_estimate = att.estimate;
                match att.y {
                    Some(y) => {
                        x = y;
                        total_estimate += att.estimate;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let mut y = x.into_inner();
                y.truncate(n);
                return Ok(PhiActionResult {
                    y: StateVector::from(y),
                    iterations,
                    substeps: s,
                    converged: true,
                    error_estimate: total_estimate,
                });
            }
            s *= 2;
        }
        let mut y = start.into_inner();
        y.truncate(n);
        y.iter_mut().for_each(|v| *v = f64::NAN);
        Ok(PhiActionResult {
            y: StateVector::from(y),
            iterations,
            substeps: self.config.max_substeps,
            converged: false,
            error_estimate: last_estimate,
        })
    }
}

fn require_bounds(
    backend: Backend,
    bounds: Option<SpectralBounds>,
) -> Result<Option<SpectralBounds>> {
    match (backend, bounds) {
        (Backend::Leja, None) => Err(Error::InvalidRequest(
            "Leja backend needs spectral bounds".into(),
        )),
        (_, b) => Ok(b),
    }
}

/// Operator `[[A, eta W], [0, K]]` of size `n + q`, where `W` holds
/// `w_q, ..., w_1` as columns and `K` shifts the trailing block up by one.
/// Started from `[w_0; e_q / eta]`, the top block of its exponential at time
/// `t` is `sum_j t^j phi_j(t A) w_j`.
struct Augmented<'a, A: ?Sized> {
    op: &'a A,
    n: usize,
    q: usize,
    /// `eta * w_j` paired with the augmented coordinate that multiplies it.
    columns: Vec<(usize, &'a [f64])>,
    eta: f64,
}

impl<'a, A: LinearOperator + ?Sized> Augmented<'a, A> {
    /// `None` when every `w_j` is zero.
    fn new(op: &'a A, ws: &[Option<&'a [f64]>], counter: &OpCounter) -> Result<Option<Self>> {
        let n = op.dim();
        let q = ws.len().saturating_sub(1);
        let mut max_norm = 0.0_f64;
        let mut columns = Vec::new();
        for (j, w) in ws.iter().enumerate().skip(1) {
            if let Some(w) = w {
                let nrm = counter.norm(w)?;
                max_norm = max_norm.max(nrm);
                if nrm > 0.0 {
                    // w_j sits in column q + 1 - j, i.e. coordinate q - j of the tail
                    columns.push((q - j, *w));
                }
            }
        }
        let w0_zero = match ws.first().copied().flatten() {
            Some(w0) => counter.norm(w0)? == 0.0,
            None => true,
        };
        if columns.is_empty() && w0_zero {
            return Ok(None);
        }
        let eta = if max_norm > 0.0 {
            2f64.powi(-(max_norm.log2().ceil() as i32))
        } else {
            1.0
        };
        Ok(Some(Self {
            op,
            n,
            q,
            columns,
            eta,
        }))
    }

    fn initial_vector(&self, w0: Option<&[f64]>) -> StateVector {
        let mut x = vec![0.0; self.n + self.q];
        if let Some(w0) = w0 {
            x[..self.n].copy_from_slice(w0);
        }
        if self.q > 0 {
            x[self.n + self.q - 1] = 1.0 / self.eta;
        }
        StateVector::from(x)
    }
}

impl<A: LinearOperator + ?Sized> LinearOperator for Augmented<'_, A> {
    fn dim(&self) -> usize {
        self.n + self.q
    }

    fn apply(&self, x: &[f64], counter: &OpCounter) -> Result<StateVector> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let (top, tail) = x.split_at(self.n);
        let ay = self.op.apply(top, counter)?;
        let mut out = if self.columns.is_empty() {
            ay.into_inner()
        } else {
            let mut coeffs = vec![1.0];
            let mut vecs: Vec<&[f64]> = vec![&ay];
            for &(k, w) in &self.columns {
                coeffs.push(self.eta * tail[k]);
                vecs.push(w);
            }
            counter.lincomb(&coeffs, &vecs)?.into_inner()
        };
        out.reserve(self.q);
        for i in 0..self.q {
            out.push(if i + 1 < self.q { tail[i + 1] } else { 0.0 });
        }
        Ok(StateVector::from(out))
    }
}

/// [`PhiEvaluator::krylov_phi_action`] with default settings.
pub fn krylov_phi_action<A: LinearOperator + ?Sized>(
    op: &A,
    req: &PhiActionRequest<'_>,
    counter: &OpCounter,
) -> Result<PhiActionResult> {
    PhiEvaluator::default().krylov_phi_action(op, req, counter)
}

/// [`PhiEvaluator::leja_phi_action`] with default settings.
pub fn leja_phi_action<A: LinearOperator + ?Sized>(
    op: &A,
    req: &PhiActionRequest<'_>,
    counter: &OpCounter,
) -> Result<PhiActionResult> {
    PhiEvaluator::default().leja_phi_action(op, req, counter)
}

/// [`PhiEvaluator::phi_linear_combination`] with default settings.
#[allow(clippy::too_many_arguments)]
pub fn phi_linear_combination<A: LinearOperator + ?Sized>(
    op: &A,
    tau: f64,
    terms: &[(usize, &[f64])],
    tol: f64,
    bounds: Option<SpectralBounds>,
    backend: Backend,
    counter: &OpCounter,
) -> Result<PhiActionResult> {
    PhiEvaluator::default().phi_linear_combination(op, tau, terms, tol, bounds, backend, counter)
}
