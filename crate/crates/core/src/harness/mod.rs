//! Work-precision experiments: run grids of (method, step size, tolerance,
//! inner-product weight), measure errors against reference solutions and
//! collect the counted cost of every run.

mod presets;
mod records;
mod selftest;

use rayon::prelude::*;

pub use presets::{preset, Preset, PresetName, ADVDIFF_PRESET_N, SHEARFLOW_DEFAULT_N};
pub use records::{
    read_csv, read_csv_from, write_csv, write_csv_to, WorkPrecisionRecord, CSV_HEADER,
};
pub use selftest::{selftest, SelftestCase, SelftestReport};

use crate::error::{Error, Result};
use crate::integrators::{integrate, rk4_step, Method, MethodConfig, Problem, RunResult};
use crate::linalg::{dense_expm, norm2, StateVector};
use crate::perfmodel::OpCounter;
use crate::problems::{AdvDiffProblem, KappaProfile, NavierStokesProblem};

/// Largest step count the Navier-Stokes reference search may use.
pub const REFERENCE_MAX_STEPS: usize = 1 << 20;

/// Relative l² difference at which two successive references agree.
pub const REFERENCE_TOL: f64 = 1e-10;

/// Relative error at or above which a completed run still counts as failed.
/// Short unstable runs can finish below the blow-up threshold of the
/// integrator while carrying no accuracy at all.
pub const DIVERGED_ERROR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    AdvDiff { n: usize, kappa: KappaProfile },
    NavierStokes { n: usize, nu: f64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<BuiltProblem> {
        match *self {
            ProblemSpec::AdvDiff { n, kappa } => {
                Ok(BuiltProblem::AdvDiff(AdvDiffProblem::new(n, kappa)?))
            }
            ProblemSpec::NavierStokes { n, nu } => {
                Ok(BuiltProblem::NavierStokes(NavierStokesProblem::new(n, nu)?))
            }
        }
    }
}

/// A constructed benchmark problem.
#[derive(Debug, Clone)]
pub enum BuiltProblem {
    AdvDiff(AdvDiffProblem),
    NavierStokes(NavierStokesProblem),
}

impl BuiltProblem {
    pub fn as_problem(&self) -> &(dyn Problem + Sync) {
        match self {
            BuiltProblem::AdvDiff(p) => p,
            BuiltProblem::NavierStokes(p) => p,
        }
    }

    pub fn initial_state(&self) -> StateVector {
        match self {
            BuiltProblem::AdvDiff(p) => p.initial_state(),
            BuiltProblem::NavierStokes(p) => p.default_initial_state(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub methods: Vec<Method>,
    pub taus: Vec<f64>,
    pub tols: Vec<f64>,
    pub zetas: Vec<f64>,
    pub t_end: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let non_empty = [
            ("methods", self.methods.is_empty()),
            ("tau", self.taus.is_empty()),
            ("tol", self.tols.is_empty()),
            ("zeta", self.zetas.is_empty()),
        ];
        if let Some((name, _)) = non_empty.iter().find(|(_, empty)| *empty) {
            return Err(Error::InvalidSpec(format!("{name} list is empty")));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidSpec(format!("tau must be positive, got {t}")));
        }
        if let Some(t) = self.tols.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidSpec(format!("tol must be positive, got {t}")));
        }
        if let Some(z) = self.zetas.iter().find(|z| !(**z >= 1.0) || !z.is_finite()) {
            return Err(Error::InvalidZeta(*z));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        match self.problem {
            ProblemSpec::AdvDiff { n, .. } if n == 0 || n > crate::linalg::DEFAULT_DIM_CAP => {
                Err(Error::InvalidSpec(format!(
                    "1D grid size must lie in 1..={} for the dense reference",
                    crate::linalg::DEFAULT_DIM_CAP
                )))
            }
            ProblemSpec::NavierStokes { n, .. } if n < NavierStokesProblem::MIN_GRID => {
                Err(Error::GridTooSmall {
                    min: NavierStokesProblem::MIN_GRID,
                    got: n,
                })
            }
            _ => Ok(()),
        }
    }

    fn min_tau(&self) -> f64 {
        self.taus.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `||u - reference|| / ||reference||` in the Euclidean norm.
pub fn error_norm(u: &[f64], reference: &[f64]) -> Result<f64> {
    if u.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: u.len(),
        });
    }
    let r = norm2(reference);
    if r == 0.0 {
        return Err(Error::ZeroReference);
    }
    let d: f64 = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(d / r)
}

/// Reference solution at `t_end`.
///
/// The linear problem uses the dense matrix exponential. The Navier-Stokes
/// problem uses RK4, starting at `min_tau / 16` and halving the step until
/// two successive solutions agree to [`REFERENCE_TOL`]; unstable runs are
/// skipped over.
pub fn compute_reference(problem: &BuiltProblem, t_end: f64, min_tau: f64) -> Result<StateVector> {
    Ok(compute_reference_detailed(problem, t_end, min_tau)?.state)
}

/// A reference solution and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub state: StateVector,
    /// RK4 steps of the accepted solution, `None` for the dense exponential.
    pub rk4_steps: Option<usize>,
    /// Step halvings from the starting step `min_tau / 16`.
    pub halvings: usize,
}

/// [`compute_reference`] together with the step count it settled on.
pub fn compute_reference_detailed(
    problem: &BuiltProblem,
    t_end: f64,
    min_tau: f64,
) -> Result<Reference> {
    let u0 = problem.initial_state();
    if t_end == 0.0 {
        return Ok(Reference {
            state: u0,
            rk4_steps: None,
            halvings: 0,
        });
    }
    match problem {
        BuiltProblem::AdvDiff(p) => {
            let e = dense_expm(&p.operator().to_dense().scaled(t_end))?;
            Ok(Reference {
                state: StateVector::from(e.mul_vec(&u0)),
                rk4_steps: None,
                halvings: 0,
            })
        }
        BuiltProblem::NavierStokes(p) => {
            let first = crate::integrators::step_count(t_end, min_tau / 16.0).max(1);
            let mut steps = first;
            let mut previous: Option<StateVector> = None;
            while steps <= REFERENCE_MAX_STEPS {
                let current = rk4_fixed(p, &u0, t_end, steps);
                if let (Some(prev), Some(cur)) = (&previous, &current) {
                    if error_norm(prev, cur)? < REFERENCE_TOL {
                        return Ok(Reference {
                            state: cur.clone(),
                            rk4_steps: Some(steps),
                            halvings: (steps / first).trailing_zeros() as usize,
                        });
                    }
                }
                previous = current;
                steps *= 2;
            }
            Err(Error::ReferenceNotConverged {
                max_steps: REFERENCE_MAX_STEPS,
            })
        }
    }
}

/// RK4 with `steps` equal steps; `None` if the run leaves the stable range.
fn rk4_fixed<P: Problem + ?Sized>(
    problem: &P,
    u0: &[f64],
    t_end: f64,
    steps: usize,
) -> Option<StateVector> {
    let counter = OpCounter::new(problem.cost_table(), 1.0).ok()?;
    let tau = t_end / steps as f64;
    let mut u = StateVector::from(u0.to_vec());
    for _ in 0..steps {
        u = rk4_step(problem, &u, tau, &counter).ok()?;
        if !u.is_finite() || u.max_abs() > crate::integrators::INSTABILITY_THRESHOLD {
            return None;
        }
    }
    Some(u)
}

/// Runs every `(method, tau, tol)` cell of the spec in parallel and expands
/// each into one record per `zeta`. Records come back in spec order:
/// method, then tau, then tol, then zeta.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<WorkPrecisionRecord>> {
    spec.validate()?;
    let problem = spec.problem.build()?;
    let reference = compute_reference(&problem, spec.t_end, spec.min_tau())?;
    run_with_reference(spec, &problem, &reference)
}

/// [`run_experiment`] against a precomputed reference.
pub fn run_with_reference(
    spec: &ExperimentSpec,
    problem: &BuiltProblem,
    reference: &[f64],
) -> Result<Vec<WorkPrecisionRecord>> {
    spec.validate()?;
    let u0 = problem.initial_state();
    let mut cells = Vec::new();
    for &method in &spec.methods {
        for &tau in &spec.taus {
            for &tol in &spec.tols {
                cells.push((method, tau, tol));
            }
        }
    }
    let runs: Vec<Result<RunResult>> = cells
        .par_iter()
        .map(|&(method, tau, tol)| {
            let cfg = MethodConfig::new(method, tau, tol, 1.0);
            integrate(problem.as_problem(), &cfg, &u0, spec.t_end)
        })
        .collect();
    let mut records = Vec::with_capacity(cells.len() * spec.zetas.len());
    for ((method, tau, tol), run) in cells.into_iter().zip(runs) {
        let run = run?;
        let error = if run.is_completed() {
            let e = error_norm(&run.final_state, reference)?;
            if e.is_finite() {
                e
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };
        let converged = run.is_completed() && error < DIVERGED_ERROR;
        for &zeta in &spec.zetas {
            let counter = OpCounter::new(run.counter.table(), zeta)?;
            counter.absorb(&run.counter);
            records.push(WorkPrecisionRecord {
                method,
                tau,
                tol,
                zeta,
                error: if converged { error } else { f64::INFINITY },
                total_cost: counter.total_cost(),
                steps: run.steps_taken,
                counts: counter.counts(),
                converged,
            });
        }
    }
    Ok(records)
}
