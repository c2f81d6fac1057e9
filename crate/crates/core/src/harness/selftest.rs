use std::fmt;

use crate::error::Result;
use crate::integrators::Problem;
use crate::linalg::dense_phi_vector;
use crate::matfunc::{
    krylov_phi_action, leja_phi_action, Backend, PhiActionRequest, MAX_PHI_INDEX,
};
use crate::perfmodel::OpCounter;
use crate::problems::{AdvDiffProblem, KappaProfile};

/// Grid sizes, diffusion coefficients and step sizes of the oracle check.
pub const SELFTEST_GRIDS: [usize; 3] = [16, 32, 64];
pub const SELFTEST_KAPPAS: [f64; 2] = [1.0 / 80.0, 1.0 / 2560.0];
pub const SELFTEST_TAUS: [f64; 2] = [1.0 / 64.0, 1.0 / 4.0];
pub const SELFTEST_TOL: f64 = 1e-12;
pub const SELFTEST_MAX_REL_ERR: f64 = 1e-10;

/// One compared case of the oracle check.
#[derive(Debug, Clone)]
pub struct SelftestCase {
    pub backend: Backend,
    pub n: usize,
    pub kappa: f64,
    pub tau: f64,
    pub p: usize,
    pub rel_err: f64,
    pub converged: bool,
}

impl SelftestCase {
    pub fn passed(&self) -> bool {
        self.converged && self.rel_err <= SELFTEST_MAX_REL_ERR
    }
}

impl fmt::Display for SelftestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<6} n={:<3} kappa={:<10.4e} tau={:<8.4e} p={} rel_err={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.backend.as_str(),
            self.n,
            self.kappa,
            self.tau,
            self.p,
            self.rel_err,
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub cases: Vec<SelftestCase>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(SelftestCase::passed)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.cases.iter().map(|c| c.rel_err).fold(0.0, f64::max)
    }
}

/// Compares both phi-action backends against the dense oracle on the 1D
/// operator, for every phi index and every grid, coefficient and step size
/// of the check.
pub fn selftest() -> Result<SelftestReport> {
    let mut report = SelftestReport::default();
    for &n in &SELFTEST_GRIDS {
        for &kappa in &SELFTEST_KAPPAS {
            let problem = AdvDiffProblem::new(n, KappaProfile::Const(kappa))?;
            let op = problem.operator();
            let dense = op.to_dense();
            let v = problem.initial_state();
            let bounds = problem.spectral_bounds(&v)?;
            for &tau in &SELFTEST_TAUS {
                for p in 0..=MAX_PHI_INDEX {
                    let expected = dense_phi_vector(&dense.scaled(tau), p, &v)?;
                    let req = PhiActionRequest {
                        p,
                        tau,
                        v: &v,
                        tol: SELFTEST_TOL,
                        bounds: Some(bounds),
                    };
                    for backend in [Backend::Krylov, Backend::Leja] {
                        let counter = OpCounter::new(problem.cost_table(), 1.0)?;
                        let result = match backend {
                            Backend::Krylov => krylov_phi_action(op, &req, &counter)?,
                            Backend::Leja => leja_phi_action(op, &req, &counter)?,
                        };
                        let rel_err = super::error_norm(&result.y, &expected)?;
                        report.cases.push(SelftestCase {
                            backend,
                            n,
                            kappa,
                            tau,
                            p,
                            rel_err: if rel_err.is_nan() {
                                f64::INFINITY
                            } else {
                                rel_err
                            },
                            converged: result.converged,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}
