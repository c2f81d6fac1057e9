//! Fixed-step time integrators: explicit RK2 and RK4, the exponential
//! Rosenbrock-Euler method and the two-stage fourth-order exponential
//! Rosenbrock method `exprb42`, all charging their vector work to an
//! [`OpCounter`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, SpectralBounds, StateVector};
use crate::matfunc::{Backend, PhiActionRequest, PhiActionResult, PhiConfig, PhiEvaluator};
use crate::perfmodel::{CostTable, OpCounter};

/// Max-norm above which a run is declared unstable.
pub const INSTABILITY_THRESHOLD: f64 = 1e12;

/// Semi-discrete problem `u' = F(u)`.
pub trait Problem {
    fn dimension(&self) -> usize;

    fn cost_table(&self) -> CostTable;

    fn rhs(&self, u: &[f64], counter: &OpCounter) -> Result<StateVector>;

    /// `J(u) w` with `J` the Jacobian of `F`; linear in `w`.
    fn jac_action(&self, u: &[f64], w: &[f64], counter: &OpCounter) -> Result<StateVector>;

    /// Box containing the spectrum of `J(u)`.
    fn spectral_bounds(&self, u: &[f64]) -> Result<SpectralBounds>;

    /// Checks length and any physical constraint on a state.
    fn validate_state(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                expected: self.dimension(),
                actual: u.len(),
            });
        }
        Ok(())
    }

    /// True when `F(u) = J u` for a fixed matrix `J`.
    fn is_linear(&self) -> bool {
        false
    }
}

/// The Jacobian of a problem frozen at one state.
#[derive(Debug, Clone, Copy)]
pub struct JacobianOperator<'a, P: ?Sized> {
    problem: &'a P,
    state: &'a [f64],
}

impl<'a, P: Problem + ?Sized> JacobianOperator<'a, P> {
    pub fn new(problem: &'a P, state: &'a [f64]) -> Self {
        Self { problem, state }
    }
}

impl<P: Problem + ?Sized> LinearOperator for JacobianOperator<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dimension()
    }

    fn apply(&self, x: &[f64], counter: &OpCounter) -> Result<StateVector> {
        self.problem.jac_action(self.state, x, counter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk2,
    Rk4,
    ExprbEulerKrylov,
    ExprbEulerLeja,
    Exprb42Leja,
    Exprb42Krylov,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rk2,
        Method::Rk4,
        Method::ExprbEulerKrylov,
        Method::ExprbEulerLeja,
        Method::Exprb42Leja,
        Method::Exprb42Krylov,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk2 => "rk2",
            Method::Rk4 => "rk4",
            Method::ExprbEulerKrylov => "exprb-euler-krylov",
            Method::ExprbEulerLeja => "exprb-euler-leja",
            Method::Exprb42Leja => "exprb42-leja",
            Method::Exprb42Krylov => "exprb42-krylov",
        }
    }

    /// Phi-function backend, `None` for the explicit methods.
    pub fn backend(self) -> Option<Backend> {
        match self {
            Method::Rk2 | Method::Rk4 => None,
            Method::ExprbEulerKrylov | Method::Exprb42Krylov => Some(Backend::Krylov),
            Method::ExprbEulerLeja | Method::Exprb42Leja => Some(Backend::Leja),
        }
    }

    pub fn is_exponential(self) -> bool {
        self.backend().is_some()
    }

    /// Classical order of convergence.
    pub fn order(self) -> u32 {
        match self {
            Method::Rk2 | Method::ExprbEulerKrylov | Method::ExprbEulerLeja => 2,
            Method::Rk4 | Method::Exprb42Leja | Method::Exprb42Krylov => 4,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub tau: f64,
    /// Absolute tolerance on the increment of each step; ignored by RK.
    pub tol: f64,
    pub zeta: f64,
    pub phi: PhiConfig,
}

impl MethodConfig {
    pub fn new(method: Method, tau: f64, tol: f64, zeta: f64) -> Self {
        Self {
            method,
            tau,
            tol,
            zeta,
            phi: PhiConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.method.is_exponential() && (!(self.tol > 0.0) || !self.tol.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.zeta >= 1.0) || !self.zeta.is_finite() {
            return Err(Error::InvalidZeta(self.zeta));
        }
        Ok(())
    }
}

/// Phi-function work done in one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Time at the start of the step.
    pub t: f64,
    pub tau: f64,
    pub phi_calls: usize,
    pub phi_iterations: usize,
    /// Largest substep count of any phi evaluation in the step.
    pub max_substeps: usize,
}

impl StepStats {
    fn record(&mut self, r: &PhiActionResult) {
        self.phi_calls += 1;
        self.phi_iterations += r.iterations;
        self.max_substeps = self.max_substeps.max(r.substeps);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    /// Stopped early; the state and counters cover the steps done so far.
    Aborted(Error),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: StateVector,
    pub counter: OpCounter,
    pub steps_taken: usize,
    pub diagnostics: Vec<StepStats>,
    pub outcome: RunOutcome,
}

impl RunResult {
    pub fn is_completed(&self) -> bool {
        self.outcome == RunOutcome::Completed
    }

    pub fn total_cost(&self) -> f64 {
        self.counter.total_cost()
    }
}

/// Explicit midpoint rule.
pub fn rk2_step<P: Problem + ?Sized>(
    problem: &P,
    u: &[f64],
    tau: f64,
    counter: &OpCounter,
) -> Result<StateVector> {
    let k1 = problem.rhs(u, counter)?;
    let mid = counter.lincomb(&[1.0, 0.5 * tau], &[u, &k1])?;
    let k2 = problem.rhs(&mid, counter)?;
    counter.lincomb(&[1.0, tau], &[u, &k2])
}

/// Classical four-stage Runge-Kutta method.
pub fn rk4_step<P: Problem + ?Sized>(
    problem: &P,
    u: &[f64],
    tau: f64,
    counter: &OpCounter,
) -> Result<StateVector> {
    let k1 = problem.rhs(u, counter)?;
    let y = counter.lincomb(&[1.0, 0.5 * tau], &[u, &k1])?;
    let k2 = problem.rhs(&y, counter)?;
    let y = counter.lincomb(&[1.0, 0.5 * tau], &[u, &k2])?;
    let k3 = problem.rhs(&y, counter)?;
    let y = counter.lincomb(&[1.0, tau], &[u, &k3])?;
    let k4 = problem.rhs(&y, counter)?;
    let a = tau / 6.0;
    let b = tau / 3.0;
    counter.lincomb(&[1.0, a, b, b, a], &[u, &k1, &k2, &k3, &k4])
}

fn leja_bounds<P: Problem + ?Sized>(
    problem: &P,
    u: &[f64],
    backend: Backend,
) -> Result<Option<SpectralBounds>> {
    match backend {
        Backend::Leja => problem.spectral_bounds(u).map(Some),
        Backend::Krylov => Ok(None),
    }
}

fn ensure_converged(r: &PhiActionResult) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        // step and time are filled in by the caller
        Err(Error::PhiFailure { step: 0, t: 0.0 })
    }
}

/// Exponential Rosenbrock-Euler step `u + tau phi_1(tau J) F(u)`.
#[allow(clippy::too_many_arguments)]
pub fn exprb_euler_step<P: Problem + ?Sized>(
    problem: &P,
    u: &[f64],
    tau: f64,
    tol: f64,
    backend: Backend,
    evaluator: &PhiEvaluator,
    counter: &OpCounter,
    stats: &mut StepStats,
) -> Result<StateVector> {
    let f = problem.rhs(u, counter)?;
    let bounds = leja_bounds(problem, u, backend)?;
    let jac = JacobianOperator::new(problem, u);
    let req = PhiActionRequest {
        p: 1,
        tau,
        v: &f,
        tol: tol / tau,
        bounds,
    };
    let r = evaluator.phi_action(&jac, &req, backend, counter)?;
    stats.record(&r);
    ensure_converged(&r)?;
    counter.lincomb(&[1.0, tau], &[u, &r.y])
}

/// Two-stage fourth-order exponential Rosenbrock step.
///
/// The stage is `U2 = u + (3/4) tau phi_1((3/4) tau J) F(u)`; the update adds
/// `tau phi_1(tau J) F(u) + (32/9) tau phi_3(tau J) D` with
/// `D = g(U2) - g(u)`, `g(v) = F(v) - J v` and `J` frozen at `u`. Both update
/// terms come from one augmented evaluation.
#[allow(clippy::too_many_arguments)]
pub fn exprb42_step<P: Problem + ?Sized>(
    problem: &P,
    u: &[f64],
    tau: f64,
    tol: f64,
    backend: Backend,
    evaluator: &PhiEvaluator,
    counter: &OpCounter,
    stats: &mut StepStats,
) -> Result<StateVector> {
    let f = problem.rhs(u, counter)?;
    let bounds = leja_bounds(problem, u, backend)?;
    let jac = JacobianOperator::new(problem, u);
    let stage_tau = 0.75 * tau;
    let req = PhiActionRequest {
        p: 1,
        tau: stage_tau,
        v: &f,
        tol: tol / stage_tau,
        bounds,
    };
    let r1 = evaluator.phi_action(&jac, &req, backend, counter)?;
    stats.record(&r1);
    ensure_converged(&r1)?;
    let stage = counter.lincomb(&[1.0, stage_tau], &[u, &r1.y])?;
    let f_stage = problem.rhs(&stage, counter)?;
    // J (U2 - u) = stage_tau * J r1
    let j_r1 = problem.jac_action(u, &r1.y, counter)?;
    let c = 32.0 / 9.0 / (tau * tau);
    let packed = counter.lincomb(&[c, -c, -c * stage_tau], &[&f_stage, &f, &j_r1])?;
    let r = evaluator.phi_linear_combination(
        &jac,
        tau,
        &[(1, &f), (3, &packed)],
        tol,
        bounds,
        backend,
        counter,
    )?;
    stats.record(&r);
    ensure_converged(&r)?;
    counter.lincomb(&[1.0, 1.0], &[u, &r.y])
}

/// Number of steps of size at most `tau` covering `[0, t_end]`.
pub fn step_count(t_end: f64, tau: f64) -> usize {
    let ratio = t_end / tau;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        (nearest as usize).max(1)
    } else {
        ratio.ceil() as usize
    }
}

fn is_abort(e: &Error) -> bool {
    matches!(
        e,
        Error::NonPositiveDensity { .. } | Error::PhiFailure { .. } | Error::Instability { .. }
    )
}

/// Integrates `u' = F(u)` from `u0` over `[0, t_end]` with fixed steps; the
/// last step is shortened to land on `t_end`.
///
/// Instability, loss of density positivity and phi-function failures end
/// the run early with [`RunOutcome::Aborted`]; the partial state and
/// counters are kept. Invalid input is reported as an error.
pub fn integrate<P: Problem + ?Sized>(
    problem: &P,
    config: &MethodConfig,
    u0: &[f64],
    t_end: f64,
) -> Result<RunResult> {
    config.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    problem.validate_state(u0)?;
    let counter = OpCounter::new(problem.cost_table(), config.zeta)?;
    let evaluator = PhiEvaluator::new(config.phi);
    let tau = config.tau;
    let steps = step_count(t_end, tau);
    let mut u = StateVector::from(u0.to_vec());
    let mut diagnostics = Vec::with_capacity(steps);
    let mut outcome = RunOutcome::Completed;
    let mut taken = 0;
    for k in 0..steps {
        let t = k as f64 * tau;
        let h = if k + 1 == steps { t_end - t } else { tau };
        let mut stats = StepStats {
            t,
            tau: h,
            ..StepStats::default()
        };
        let step = match (config.method, config.method.backend()) {
            (Method::Rk2, _) => rk2_step(problem, &u, h, &counter),
            (Method::Rk4, _) => rk4_step(problem, &u, h, &counter),
            (Method::ExprbEulerKrylov | Method::ExprbEulerLeja, Some(b)) => exprb_euler_step(
                problem, &u, h, config.tol, b, &evaluator, &counter, &mut stats,
            ),
            (_, Some(b)) => exprb42_step(
                problem, &u, h, config.tol, b, &evaluator, &counter, &mut stats,
            ),
            (_, None) => unreachable!("explicit methods are matched above"),
        };
        diagnostics.push(stats);
        let next = match step.and_then(|v| check_state(problem, v, k, t + h)) {
            Ok(v) => v,
            Err(Error::PhiFailure { .. }) => {
                outcome = RunOutcome::Aborted(Error::PhiFailure { step: k, t });
                break;
            }
            Err(e) if is_abort(&e) => {
                outcome = RunOutcome::Aborted(e);
                break;
            }
            Err(e) => return Err(e),
        };
        u = next;
        taken += 1;
    }
    Ok(RunResult {
        final_state: u,
        counter,
        steps_taken: taken,
        diagnostics,
        outcome,
    })
}

fn check_state<P: Problem + ?Sized>(
    problem: &P,
    v: StateVector,
    step: usize,
    t: f64,
) -> Result<StateVector> {
    let norm = v.max_abs();
    if !v.is_finite() || norm > INSTABILITY_THRESHOLD {
        return Err(Error::Instability { step, t, norm });
    }
    problem.validate_state(&v)?;
    Ok(v)
}

#[cfg(test)]
mod tests;
