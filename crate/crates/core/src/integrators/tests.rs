use super::*;
use crate::linalg::{dense_expm, norm2, DenseMatrix, GershgorinRows, StencilOperator1D};
use crate::perfmodel::Primitive;
use crate::problems::{AdvDiffProblem, KappaProfile, NavierStokesProblem};
use approx::assert_relative_eq;

/// `u' = lambda u` on a single unknown.
struct Scalar(f64);

impl Problem for Scalar {
    fn dimension(&self) -> usize {
        1
    }

    fn cost_table(&self) -> CostTable {
        CostTable::advdiff_1d(1)
    }

    fn rhs(&self, u: &[f64], counter: &OpCounter) -> Result<StateVector> {
        counter.record(Primitive::Matvec)?;
        Ok(StateVector::from(vec![self.0 * u[0]]))
    }

    fn jac_action(&self, _u: &[f64], w: &[f64], counter: &OpCounter) -> Result<StateVector> {
        self.rhs(w, counter)
    }

    fn spectral_bounds(&self, _u: &[f64]) -> Result<SpectralBounds> {
        SpectralBounds::new(self.0.min(0.0), self.0.max(0.0), 0.0)
    }
}

/// `u' = 0` with a nonzero Jacobian-free state.
struct Frozen(usize);

impl Problem for Frozen {
    fn dimension(&self) -> usize {
        self.0
    }

    fn cost_table(&self) -> CostTable {
        CostTable::advdiff_1d(self.0)
    }

    fn rhs(&self, u: &[f64], counter: &OpCounter) -> Result<StateVector> {
        counter.record(Primitive::Matvec)?;
        Ok(StateVector::zeros(u.len()))
    }

    fn jac_action(&self, _u: &[f64], w: &[f64], counter: &OpCounter) -> Result<StateVector> {
        self.rhs(w, counter)
    }

    fn spectral_bounds(&self, _u: &[f64]) -> Result<SpectralBounds> {
        SpectralBounds::new(0.0, 0.0, 0.0)
    }
}

fn counter_for<P: Problem>(p: &P) -> OpCounter {
    OpCounter::new(p.cost_table(), 1.0).unwrap()
}

fn exact_linear(op: &StencilOperator1D, t: f64, u: &[f64]) -> Vec<f64> {
    dense_expm(&op.to_dense().scaled(t)).unwrap().mul_vec(u)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

fn one_step(method: Method, p: &impl Problem, u: &[f64], tau: f64, tol: f64) -> StateVector {
    let cfg = MethodConfig::new(method, tau, tol, 1.0);
    let r = integrate(p, &cfg, u, tau).unwrap();
    assert!(r.is_completed(), "{method}: {:?}", r.outcome);
    assert_eq!(r.steps_taken, 1);
    r.final_state
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
    }
    assert!("rk3".parse::<Method>().is_err());
    assert_eq!(Method::Exprb42Leja.backend(), Some(Backend::Leja));
    assert!(!Method::Rk4.is_exponential());
}

#[test]
fn scalar_decay_steps() {
    let p = Scalar(-1.0);
    let c = counter_for(&p);
    let rk2 = rk2_step(&p, &[1.0], 0.1, &c).unwrap();
    assert_relative_eq!(rk2[0], 0.905, epsilon = 1e-15);
    let rk4 = rk4_step(&p, &[1.0], 0.1, &c).unwrap();
    assert_relative_eq!(rk4[0], 217161.0 / 240000.0, epsilon = 1e-15);
    assert_relative_eq!(rk4[0], 0.9048375, epsilon = 1e-15);
}

#[test]
fn zero_rhs_leaves_state_unchanged() {
    let p = Frozen(7);
    let u: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
    for m in Method::ALL {
        let y = one_step(m, &p, &u, 0.3, 1e-8);
        assert_eq!(y.as_ref(), u.as_slice(), "{m}");
    }
}

#[test]
fn rk4_step_is_degree_four_taylor() {
    let p = AdvDiffProblem::new(32, KappaProfile::Const(0.02)).unwrap();
    let a = p.operator().to_dense();
    let u = p.initial_state();
    let tau = 1e-3;
    let mut term = u.to_vec();
    let mut want = u.to_vec();
    for k in 1..=4 {
        term = a
            .mul_vec(&term)
            .iter()
            .map(|x| x * tau / k as f64)
            .collect();
        want.iter_mut().zip(&term).for_each(|(w, t)| *w += t);
    }
    let got = rk4_step(&p, &u, tau, &counter_for(&p)).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-13, "{g} vs {w}");
    }
}

#[test]
fn explicit_step_costs() {
    let n = 159;
    let p = AdvDiffProblem::new(n, KappaProfile::Const(1.0 / 80.0)).unwrap();
    let u = p.initial_state();
    let c = counter_for(&p);
    rk4_step(&p, &u, 1e-3, &c).unwrap();
    // 4 matvecs (8n), three 2-term combinations (9n), one 5-term combination (6n)
    const RK4_STEP_COST_PER_UNKNOWN: f64 = 23.0;
    assert_eq!(c.total_cost(), RK4_STEP_COST_PER_UNKNOWN * n as f64);
    assert_eq!(c.counts().matvec, 4);
    c.reset();
    rk2_step(&p, &u, 1e-3, &c).unwrap();
    // 2 matvecs (4n), two 2-term combinations (6n)
    assert_eq!(c.total_cost(), 10.0 * n as f64);
}

#[test]
fn exponential_methods_exact_for_linear_problems() {
    for profile in [
        KappaProfile::Const(1.0 / 80.0),
        KappaProfile::Const(1.0 / 2560.0),
        KappaProfile::Mixed,
    ] {
        let p = AdvDiffProblem::new(48, profile).unwrap();
        let u = p.initial_state();
        for tau in [0.5, 0.125, 1.0 / 64.0] {
            let want = exact_linear(p.operator(), tau, &u);
            for tol in [1e-6, 1e-10] {
                for m in [
                    Method::ExprbEulerKrylov,
                    Method::ExprbEulerLeja,
                    Method::Exprb42Krylov,
                    Method::Exprb42Leja,
                ] {
                    let y = one_step(m, &p, &u, tau, tol);
                    let e = dist(&y, &want);
                    assert!(e <= 10.0 * tol, "{m} {profile} tau={tau} tol={tol}: {e}");
                }
            }
        }
    }
}

#[test]
fn leja_run_on_diffusion_problem() {
    let p = AdvDiffProblem::new(159, KappaProfile::Const(1.0 / 80.0)).unwrap();
    let u0 = p.initial_state();
    let cfg = MethodConfig::new(Method::ExprbEulerLeja, 0.25, 1e-7, 1.0);
    let r = integrate(&p, &cfg, &u0, 1.0).unwrap();
    assert!(r.is_completed());
    assert_eq!(r.steps_taken, 4);
    let want = exact_linear(p.operator(), 1.0, &u0);
    let e = dist(&r.final_state, &want);
    assert!(e <= 4e-7, "{e}");
    assert_eq!(
        r.diagnostics
            .iter()
            .map(|d| d.phi_iterations as u64)
            .sum::<u64>(),
        r.counter.counts().matvec - 4
    );
}

#[test]
fn rk2_is_unstable_at_large_steps() {
    let p = AdvDiffProblem::new(159, KappaProfile::Const(1.0 / 80.0)).unwrap();
    let cfg = MethodConfig::new(Method::Rk2, 0.25, 0.0, 1.0);
    let r = integrate(&p, &cfg, &p.initial_state(), 1.0).unwrap();
    assert!(r.steps_taken <= 4);
    // 4 steps of amplification up to ~ (1 + 320 + 320^2/2)^4 stay below 1e12,
    // so run longer to see the abort
    let r = integrate(&p, &cfg, &p.initial_state(), 10.0).unwrap();
    assert!(
        matches!(r.outcome, RunOutcome::Aborted(Error::Instability { .. })),
        "{:?}",
        r.outcome
    );
    assert!(r.steps_taken < 40);
}

#[test]
fn step_count_and_final_partial_step() {
    assert_eq!(step_count(1.0, 0.1), 10);
    assert_eq!(step_count(1.0, 0.25), 4);
    assert_eq!(step_count(1.0, 0.3), 4);
    assert_eq!(step_count(0.25, 0.25), 1);
    let p = Scalar(-1.0);
    let r = integrate(
        &p,
        &MethodConfig::new(Method::Rk4, 0.3, 0.0, 1.0),
        &[1.0],
        1.0,
    )
    .unwrap();
    assert_eq!(r.steps_taken, 4);
    assert_relative_eq!(r.diagnostics[3].tau, 0.1, epsilon = 1e-15);
    assert!((r.final_state[0] - (-1.0f64).exp()).abs() < 1e-4);
}

#[test]
fn config_validation() {
    let p = Scalar(-1.0);
    assert!(integrate(
        &p,
        &MethodConfig::new(Method::Rk4, 0.0, 0.0, 1.0),
        &[1.0],
        1.0
    )
    .is_err());
    assert!(integrate(
        &p,
        &MethodConfig::new(Method::ExprbEulerKrylov, 0.1, 0.0, 1.0),
        &[1.0],
        1.0
    )
    .is_err());
    assert!(integrate(
        &p,
        &MethodConfig::new(Method::Rk4, 0.1, 0.0, 0.5),
        &[1.0],
        1.0
    )
    .is_err());
    assert!(integrate(
        &p,
        &MethodConfig::new(Method::Rk4, 0.1, 0.0, 1.0),
        &[1.0],
        0.0
    )
    .is_err());
    assert!(integrate(
        &p,
        &MethodConfig::new(Method::Rk4, 0.1, 0.0, 1.0),
        &[1.0, 2.0],
        1.0
    )
    .is_err());
}

#[test]
fn phi_failure_aborts_with_context() {
    let p = AdvDiffProblem::new(80, KappaProfile::Const(1.0 / 2560.0)).unwrap();
    let mut cfg = MethodConfig::new(Method::ExprbEulerKrylov, 1.0, 1e-12, 1.0);
    cfg.phi = PhiConfig {
        krylov_max_dim: 2,
        leja_points: 4,
        max_substeps: 2,
        ..PhiConfig::default()
    };
    let r = integrate(&p, &cfg, &p.initial_state(), 2.0).unwrap();
    assert_eq!(
        r.outcome,
        RunOutcome::Aborted(Error::PhiFailure { step: 0, t: 0.0 })
    );
    assert_eq!(r.steps_taken, 0);
    assert!(r.counter.counts().matvec > 0);
}

#[test]
fn navier_stokes_conserves_mass() {
    let p = NavierStokesProblem::new(16, 1e-3).unwrap();
    let u0 = p.default_initial_state();
    let m0 = p.total_mass(&u0).unwrap();
    let t_end = 0.5;
    for m in Method::ALL {
        let tau = if m.is_exponential() {
            0.125
        } else {
            1.0 / 64.0
        };
        let cfg = MethodConfig::new(m, tau, 1e-9, 1.0);
        let r = integrate(&p, &cfg, &u0, t_end).unwrap();
        assert!(r.is_completed(), "{m}: {:?}", r.outcome);
        let drift = (p.total_mass(&r.final_state).unwrap() - m0).abs() / m0;
        assert!(drift <= 1e-11 * t_end, "{m}: {drift}");
    }
}

#[test]
fn navier_stokes_translation_equivariance() {
    let p = NavierStokesProblem::new(12, 1e-3).unwrap();
    let u0 = p.default_initial_state();
    let shifted = p.shift_state(&u0, 3, 5).unwrap();
    let cfg = MethodConfig::new(Method::Rk4, 0.05, 0.0, 1.0);
    let a = integrate(&p, &cfg, &u0, 0.5).unwrap();
    let b = integrate(&p, &cfg, &shifted, 0.5).unwrap();
    assert_eq!(p.shift_state(&a.final_state, 3, 5).unwrap(), b.final_state);
}

#[test]
fn navier_stokes_leja_bounds_follow_the_state() {
    let p = NavierStokesProblem::new(8, 1e-3).unwrap();
    let u0 = p.default_initial_state();
    let b0 = p.spectral_bounds(&u0).unwrap();
    let cfg = MethodConfig::new(Method::Rk4, 0.05, 0.0, 1.0);
    let r = integrate(&p, &cfg, &u0, 2.0).unwrap();
    let b1 = p.spectral_bounds(&r.final_state).unwrap();
    assert_ne!(b0, b1);
    // the rows of the frozen Jacobian stay consistent with the dense matrix
    let c = counter_for(&p);
    let jac = JacobianOperator::new(&p, &r.final_state);
    let dense: DenseMatrix = crate::linalg::densify(&jac, &c).unwrap();
    let dense_rows = dense.gershgorin_rows();
    let rows = p.jacobian_gershgorin_rows(&r.final_state).unwrap();
    for (a, b) in rows.iter().zip(&dense_rows) {
        assert!((a.1 - b.1).abs() < 1e-9 * (1.0 + b.1));
    }
}
