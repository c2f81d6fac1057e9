use super::*;
use crate::integrators::Problem;
use crate::linalg::{
    densify, gershgorin_bounds, DenseMatrix, GershgorinRows, LinearOperator, StateVector,
};
use crate::perfmodel::OpCounter;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn ns_counter(p: &NavierStokesProblem) -> OpCounter {
    OpCounter::new(p.cost_table(), 1.0).unwrap()
}

/// Shear flow plus a smooth deterministic perturbation of every field.
fn perturbed_state(p: &NavierStokesProblem, amp: f64) -> StateVector {
    let n = p.n();
    let big_n = n * n;
    let mut s = p.default_initial_state().into_inner();
    for j in 0..n {
        for i in 0..n {
            let x = i as f64 / n as f64;
            let y = j as f64 / n as f64;
            let k = j * n + i;
            s[k] += amp * (2.0 * PI * (x + 2.0 * y)).sin();
            s[big_n + k] += amp * (2.0 * PI * (3.0 * x - y)).cos();
            s[2 * big_n + k] += amp * (2.0 * PI * x).sin() * (4.0 * PI * y).cos();
        }
    }
    StateVector::from(s)
}

fn direction(len: usize, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|k| ((k as f64 + 1.0) * 0.731 + phase).sin())
        .collect()
}

struct DenseJac<'a>(&'a DenseMatrix);

impl GershgorinRows for DenseJac<'_> {
    fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        self.0.gershgorin_rows()
    }
}

#[test]
fn shear_flow_values() {
    let p = NavierStokesProblem::new(40, 1e-6).unwrap();
    let s = p.default_initial_state();
    let big_n = 1600;
    // (x, y) = (0.25, 0.25) is grid point (10, 10)
    let k = 10 * 40 + 10;
    assert_eq!(s[k], 1.0);
    assert!(s[big_n + k].abs() < 1e-15);
    assert_relative_eq!(s[2 * big_n + k], 5e-3, epsilon = 1e-15);
    assert!(s[..big_n].iter().all(|&r| r == 1.0));
    let u_bottom = s[big_n];
    assert_relative_eq!(u_bottom, 0.1 * (-7.5f64).tanh(), epsilon = 1e-16);
    assert!((u_bottom + 0.09999994).abs() < 1e-8);
}

#[test]
fn constant_state_is_steady() {
    let p = NavierStokesProblem::new(6, 1e-3).unwrap();
    let mut s = vec![1.0; 36];
    s.extend(vec![0.3; 36]);
    s.extend(vec![-0.2; 36]);
    let f = p.rhs_uncounted(&s).unwrap();
    assert!(f.iter().all(|&x| x.abs() < 1e-14));
}

#[test]
fn continuity_rhs_sums_to_zero() {
    let p = NavierStokesProblem::new(12, 1e-4).unwrap();
    let s = perturbed_state(&p, 0.05);
    let f = p.rhs_uncounted(&s).unwrap();
    let sum: f64 = f[..144].iter().sum();
    assert!(sum.abs() < 1e-12, "{sum}");
}

#[test]
fn rhs_and_jacobian_costs() {
    let p = NavierStokesProblem::new(8, 1e-3).unwrap();
    let c = ns_counter(&p);
    let s = p.default_initial_state();
    p.rhs(&s, &c).unwrap();
    assert_eq!(c.total_cost(), 12.0 * 64.0);
    c.reset();
    p.jac_action(&s, &s, &c).unwrap();
    assert_eq!(c.total_cost(), 21.0 * 64.0);
}

#[test]
fn density_must_be_positive() {
    let p = NavierStokesProblem::new(4, 1e-3).unwrap();
    let mut s = p.default_initial_state().into_inner();
    s[5] = -0.1;
    assert!(matches!(
        p.rhs_uncounted(&s),
        Err(crate::Error::NonPositiveDensity { index: 5, .. })
    ));
    assert!(p.validate_state(&s).is_err());
    assert!(NavierStokesProblem::new(3, 1e-3).is_err());
}

#[test]
fn jacobian_matches_central_differences() {
    let p = NavierStokesProblem::new(10, 1e-3).unwrap();
    let s = perturbed_state(&p, 0.05);
    let w = direction(300, 0.2);
    let jw = p.jac_action_uncounted(&s, &w).unwrap();
    let mut errs = Vec::new();
    for eps in [1e-4, 1e-5] {
        let plus: Vec<f64> = s.iter().zip(&w).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = s.iter().zip(&w).map(|(a, b)| a - eps * b).collect();
        let fp = p.rhs_uncounted(&plus).unwrap();
        let fm = p.rhs_uncounted(&minus).unwrap();
        let err = fp
            .iter()
            .zip(fm.iter())
            .zip(jw.iter())
            .map(|((a, b), j)| ((a - b) / (2.0 * eps) - j).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    let scale = jw.max_abs();
    assert!(errs[0] < 1e-6 * scale, "{errs:?}");
    // second-order decay until roundoff takes over
    assert!(
        errs[1] < 0.05 * errs[0] || errs[1] < 1e-9 * scale,
        "{errs:?}"
    );
}

#[test]
fn densified_jacobian_matches_finite_differences() {
    let p = NavierStokesProblem::new(8, 1e-3).unwrap();
    let s = perturbed_state(&p, 0.05);
    let c = ns_counter(&p);
    let jac = crate::integrators::JacobianOperator::new(&p, &s);
    let dense = densify(&jac, &c).unwrap();
    assert_eq!(dense.rows(), 192);
    let eps = 1e-6;
    for col in 0..192 {
        let mut plus = s.clone().into_inner();
        let mut minus = s.clone().into_inner();
        plus[col] += eps;
        minus[col] -= eps;
        let fp = p.rhs_uncounted(&plus).unwrap();
        let fm = p.rhs_uncounted(&minus).unwrap();
        for row in 0..192 {
            let fd = (fp[row] - fm[row]) / (2.0 * eps);
            assert!((fd - dense[(row, col)]).abs() < 1e-6, "({row}, {col})");
        }
    }
}

#[test]
fn gershgorin_rows_match_dense_matrix() {
    let p = NavierStokesProblem::new(8, 2e-3).unwrap();
    let s = perturbed_state(&p, 0.1);
    let c = ns_counter(&p);
    let dense = densify(&crate::integrators::JacobianOperator::new(&p, &s), &c).unwrap();
    let want = DenseJac(&dense).gershgorin_rows();
    let got = p.jacobian_gershgorin_rows(&s).unwrap();
    for (k, (a, b)) in got.iter().zip(&want).enumerate() {
        assert!((a.0 - b.0).abs() <= 1e-10 * (1.0 + b.0.abs()), "diag {k}");
        assert!((a.1 - b.1).abs() <= 1e-10 * (1.0 + b.1), "radius {k}");
    }
    let bounds = p.spectral_bounds(&s).unwrap();
    let dense_bounds = gershgorin_bounds(&dense);
    assert_relative_eq!(bounds.real_min, dense_bounds.real_min, max_relative = 1e-12);
    assert_relative_eq!(
        bounds.imag_halfwidth,
        dense_bounds.imag_halfwidth,
        max_relative = 1e-12
    );
}

#[test]
fn spectrum_inside_gershgorin_box() {
    let p = NavierStokesProblem::new(8, 1e-3).unwrap();
    for s in [p.default_initial_state(), perturbed_state(&p, 0.1)] {
        let c = ns_counter(&p);
        let dense = densify(&crate::integrators::JacobianOperator::new(&p, &s), &c).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(192, 192, dense.as_slice());
        let bounds = p.spectral_bounds(&s).unwrap();
        for ev in m.complex_eigenvalues().iter() {
            assert!(
                bounds.contains(ev.re, ev.im, 1e-8),
                "{ev} outside {bounds:?}"
            );
        }
    }
}

#[test]
fn rhs_is_translation_equivariant() {
    let p = NavierStokesProblem::new(9, 1e-3).unwrap();
    let s = perturbed_state(&p, 0.05);
    let shifted = p.shift_state(&s, 2, -3).unwrap();
    let f = p.rhs_uncounted(&s).unwrap();
    let fs = p.rhs_uncounted(&shifted).unwrap();
    assert_eq!(p.shift_state(&f, 2, -3).unwrap(), fs);
}

#[test]
fn vorticity_of_sine_perturbation() {
    let n = 16;
    let p = NavierStokesProblem::new(n, 1e-3).unwrap();
    let big_n = n * n;
    let h = 1.0 / n as f64;
    let mut s = vec![1.0; big_n];
    s.extend(vec![0.0; big_n]);
    s.extend((0..big_n).map(|k| (2.0 * PI * (k % n) as f64 * h).sin()));
    let w = p.vorticity(&s).unwrap();
    for j in 0..n as isize {
        for i in 0..n as isize {
            let x = i as f64 * h;
            let want = ((2.0 * PI * (x + h)).sin() - (2.0 * PI * (x - h)).sin()) / (2.0 * h);
            assert!((w.get(i, j) - want).abs() < 1e-12);
        }
    }
    let constant: Vec<f64> = [vec![1.0; big_n], vec![0.4; big_n], vec![0.7; big_n]].concat();
    assert!(p.vorticity(&constant).unwrap().max_abs() < 1e-14);
}

#[test]
fn shear_vorticity_peaks_at_quarter_lines() {
    let n = 40;
    let p = NavierStokesProblem::new(n, 1e-6).unwrap();
    let w = p.vorticity(&p.default_initial_state()).unwrap();
    let row_max = |j: isize| {
        (0..n as isize)
            .map(|i| w.get(i, j).abs())
            .fold(0.0, f64::max)
    };
    let (jmax, _) = (0..n as isize)
        .map(|j| (j, row_max(j)))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let y = jmax as f64 / n as f64;
    assert!(
        (y - 0.25).abs() < 0.05 || (y - 0.75).abs() < 0.05,
        "peak at y = {y}"
    );
}

#[test]
fn field_export() {
    let p = NavierStokesProblem::new(5, 1e-3).unwrap();
    let fields = p.fields(&p.default_initial_state()).unwrap();
    let names: Vec<&str> = fields.iter().map(|f| f.0).collect();
    assert_eq!(names, ["rho", "u", "v", "omega"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.csv");
    fields[0].1.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().all(|l| l.split(',').count() == 5));
}

#[test]
fn advdiff_jacobian_is_state_independent() {
    let p = AdvDiffProblem::new(20, KappaProfile::Mixed).unwrap();
    let c = OpCounter::new(p.cost_table(), 1.0).unwrap();
    let w = direction(20, 0.0);
    let a = p.jac_action(&[0.0; 20], &w, &c).unwrap();
    let b = p.jac_action(&direction(20, 1.0), &w, &c).unwrap();
    assert_eq!(a, b);
    assert_eq!(p.operator().dim(), 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jacobian_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, phase in 0.0f64..6.0) {
        let ns = NavierStokesProblem::new(6, 1e-3).unwrap();
        let ad = AdvDiffProblem::new(30, KappaProfile::Mixed).unwrap();
        let problems: [(&dyn Problem, StateVector); 2] = [
            (&ns, perturbed_state(&ns, 0.05)),
            (&ad, ad.initial_state()),
        ];
        for (p, s) in problems {
            let c = OpCounter::new(p.cost_table(), 1.0).unwrap();
            let d = p.dimension();
            let w1 = direction(d, phase);
            let w2 = direction(d, 2.0 * phase + 0.5);
            let comb: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = p.jac_action(&s, &comb, &c).unwrap();
            let j1 = p.jac_action(&s, &w1, &c).unwrap();
            let j2 = p.jac_action(&s, &w2, &c).unwrap();
            let scale = 1.0 + j1.max_abs() + j2.max_abs();
            for k in 0..d {
                prop_assert!((lhs[k] - alpha * j1[k] - beta * j2[k]).abs() <= 1e-12 * scale);
            }
            let zero = p.jac_action(&s, &vec![0.0; d], &c).unwrap();
            prop_assert!(zero.iter().all(|&x| x == 0.0));
        }
    }
}
