use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrators::Problem;
use crate::linalg::{
    build_advdiff_operator, gershgorin_bounds, LinearOperator, SpectralBounds, StateVector,
    StencilOperator1D,
};
use crate::perfmodel::{CostTable, OpCounter};

/// Diffusion coefficient profile for the 1D problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaProfile {
    Const(f64),
    /// Smooth transition from advection-dominated near `x = 0` to
    /// diffusion-dominated near `x = 1`.
    Mixed,
}

impl KappaProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            KappaProfile::Const(c) => c,
            KappaProfile::Mixed => 33.0 / 5120.0 + 31.0 / 5120.0 * (20.0 * x - 16.0).tanh(),
        }
    }
}

impl fmt::Display for KappaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaProfile::Const(c) => write!(f, "const:{c}"),
            KappaProfile::Mixed => f.write_str("mixed"),
        }
    }
}

/// Parses `const:<value>` or `mixed`.
impl FromStr for KappaProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mixed" {
            return Ok(KappaProfile::Mixed);
        }
        let value = s
            .strip_prefix("const:")
            .ok_or_else(|| Error::InvalidSpec(format!("unknown kappa profile {s:?}")))?;
        let c: f64 = value
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad kappa value {value:?}")))?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::NonPositiveKappa { x: 0.0, value: c });
        }
        Ok(KappaProfile::Const(c))
    }
}

/// Samples `profile` on the `n` interior grid points `x_i = i/(n+1)`.
pub fn advdiff_kappa(profile: KappaProfile, n: usize) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    (1..=n).map(|i| profile.eval(i as f64 * h)).collect()
}

/// Linear advection-diffusion `u_t = kappa(x) u_xx - u_x` on `(0, 1)` with
/// homogeneous Dirichlet data and `u(0, x) = x (1 - x)`.
#[derive(Debug, Clone)]
pub struct AdvDiffProblem {
    op: StencilOperator1D,
    profile: KappaProfile,
    bounds: SpectralBounds,
}

impl AdvDiffProblem {
    pub fn new(n: usize, profile: KappaProfile) -> Result<Self> {
        let op = build_advdiff_operator(n, |x| profile.eval(x))?;
        let bounds = gershgorin_bounds(&op);
        Ok(Self {
            op,
            profile,
            bounds,
        })
    }

    pub fn operator(&self) -> &StencilOperator1D {
        &self.op
    }

    pub fn profile(&self) -> KappaProfile {
        self.profile
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.op.h();
        (1..=self.n()).map(|i| i as f64 * h).collect()
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::from(
            self.grid()
                .into_iter()
                .map(|x| x * (1.0 - x))
                .collect::<Vec<_>>(),
        )
    }
}

impl Problem for AdvDiffProblem {
    fn dimension(&self) -> usize {
        self.op.n()
    }

    fn cost_table(&self) -> CostTable {
        CostTable::advdiff_1d(self.op.n())
    }

    fn rhs(&self, u: &[f64], counter: &OpCounter) -> Result<StateVector> {
        self.op.apply(u, counter)
    }

    fn jac_action(&self, _u: &[f64], w: &[f64], counter: &OpCounter) -> Result<StateVector> {
        self.op.apply(w, counter)
    }

    fn spectral_bounds(&self, _u: &[f64]) -> Result<SpectralBounds> {
        Ok(self.bounds)
    }

    fn is_linear(&self) -> bool {
        true
    }
}
