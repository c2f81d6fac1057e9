//! Benchmark problems: 1D linear advection-diffusion and 2D compressible
//! isothermal Navier-Stokes with a shear-flow initial state.

mod advdiff;
mod field;
mod navier_stokes;

pub use advdiff::{advdiff_kappa, AdvDiffProblem, KappaProfile};
pub use field::{grid_index, Grid2DField};
pub use navier_stokes::{shear_flow_init, NavierStokesProblem};

#[cfg(test)]
mod tests;
