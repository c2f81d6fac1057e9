use std::fmt;
use std::str::FromStr;

use super::{
    compute_reference, run_with_reference, ExperimentSpec, ProblemSpec, WorkPrecisionRecord,
};
use crate::error::{Error, Result};
use crate::integrators::Method;
use crate::linalg::StateVector;
use crate::problems::KappaProfile;

/// Grid size of the 1D presets.
pub const ADVDIFF_PRESET_N: usize = 159;

/// Desk-scale default grid of the shear-flow preset. The full-size study
/// uses 160.
pub const SHEARFLOW_DEFAULT_N: usize = 40;

const TOLS: [f64; 2] = [1e-4, 1e-7];
const ZETAS: [f64; 2] = [1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Diffusion,
    Advection,
    Mixed,
    Shearflow,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::Diffusion,
        PresetName::Advection,
        PresetName::Mixed,
        PresetName::Shearflow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Diffusion => "diffusion",
            PresetName::Advection => "advection",
            PresetName::Mixed => "mixed",
            PresetName::Shearflow => "shearflow",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown preset {s:?}")))
    }
}

/// A named study. Some presets give different step-size ranges to
/// different methods and therefore consist of several experiment specs.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub specs: Vec<ExperimentSpec>,
}

impl Preset {
    /// Runs every spec in order and concatenates the records. Specs that
    /// share a problem and end time share one reference solution, computed
    /// for the smallest step size among them.
    pub fn run(&self) -> Result<Vec<WorkPrecisionRecord>> {
        let mut references: Vec<(ProblemSpec, f64, StateVector)> = Vec::new();
        let mut out = Vec::new();
        for spec in &self.specs {
            spec.validate()?;
            let problem = spec.problem.build()?;
            let cached = references
                .iter()
                .position(|(p, t, _)| *p == spec.problem && *t == spec.t_end);
            let index = match cached {
                Some(i) => i,
                None => {
                    let min_tau = self
                        .specs
                        .iter()
                        .filter(|s| s.problem == spec.problem && s.t_end == spec.t_end)
                        .map(|s| s.min_tau())
                        .fold(f64::INFINITY, f64::min);
                    let reference = compute_reference(&problem, spec.t_end, min_tau)?;
                    references.push((spec.problem, spec.t_end, reference));
                    references.len() - 1
                }
            };
            out.extend(run_with_reference(spec, &problem, &references[index].2)?);
        }
        Ok(out)
    }

    pub fn record_count(&self) -> usize {
        self.specs
            .iter()
            .map(|s| s.methods.len() * s.taus.len() * s.tols.len() * s.zetas.len())
            .sum()
    }
}

fn halvings(start: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| start / f64::powi(2.0, k as i32))
        .collect()
}

fn advdiff_spec(
    n: usize,
    kappa: KappaProfile,
    methods: Vec<Method>,
    taus: Vec<f64>,
) -> ExperimentSpec {
    ExperimentSpec {
        problem: ProblemSpec::AdvDiff { n, kappa },
        methods,
        taus,
        tols: TOLS.to_vec(),
        zetas: ZETAS.to_vec(),
        t_end: 1.0,
    }
}

/// Builds a preset. `n_override` replaces the default grid size.
pub fn preset(name: PresetName, n_override: Option<usize>) -> Preset {
    let krylov = vec![Method::ExprbEulerKrylov, Method::Exprb42Krylov];
    let leja = vec![Method::ExprbEulerLeja, Method::Exprb42Leja];
    let explicit = vec![Method::Rk2, Method::Rk4];
    let n1 = n_override.unwrap_or(ADVDIFF_PRESET_N);
    let specs = match name {
        PresetName::Diffusion => vec![advdiff_spec(
            n1,
            KappaProfile::Const(1.0 / 80.0),
            Method::ALL.to_vec(),
            halvings(0.25, 11),
        )],
        PresetName::Advection => vec![advdiff_spec(
            n1,
            KappaProfile::Const(1.0 / 2560.0),
            Method::ALL.to_vec(),
            halvings(0.25, 11),
        )],
        PresetName::Mixed => vec![
            advdiff_spec(n1, KappaProfile::Mixed, krylov, halvings(0.1, 9)),
            advdiff_spec(n1, KappaProfile::Mixed, leja, halvings(0.05, 9)),
            advdiff_spec(n1, KappaProfile::Mixed, explicit, halvings(0.25, 11)),
        ],
        PresetName::Shearflow => {
            let problem = ProblemSpec::NavierStokes {
                n: n_override.unwrap_or(SHEARFLOW_DEFAULT_N),
                nu: 1e-6,
            };
            let mut exponential = krylov;
            exponential.extend(leja);
            vec![
                ExperimentSpec {
                    problem,
                    methods: exponential,
                    taus: halvings(1.0, 8),
                    tols: vec![1e-6, 1e-9],
                    zetas: ZETAS.to_vec(),
                    t_end: 12.0,
                },
                ExperimentSpec {
                    problem,
                    methods: explicit,
                    taus: halvings(1.0 / 32.0, 6),
                    tols: vec![1e-6],
                    zetas: ZETAS.to_vec(),
                    t_end: 12.0,
                },
            ]
        }
    };
    Preset { name, specs }
}
