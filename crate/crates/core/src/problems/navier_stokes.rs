use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrators::Problem;
use crate::linalg::{bounds_from_rows, SpectralBounds, StateVector};
use crate::perfmodel::{CostTable, OpCounter, Primitive};

use super::Grid2DField;

/// Compressible isothermal Navier-Stokes equations on the periodic unit
/// square, discretized with second-order central differences.
///
/// The state is `[rho; u; v]`, each block of length `N = n²` in the grid
/// ordering of [`Grid2DField`]. The right-hand side is
///
/// ```text
/// F1 = -Dx(rho u) - Dy(rho v)
/// F2 = -u Dx u - v Dy u - Dx(rho) / rho + nu Lap u
/// F3 = -u Dx v - v Dy v - Dy(rho) / rho + nu Lap v
/// ```
///
/// and the Jacobian action is the exact derivative of this discrete map.
#[derive(Debug, Clone)]
pub struct NavierStokesProblem {
    n: usize,
    h: f64,
    nu: f64,
    /// Periodic successor and predecessor of each axis index.
    next: Vec<usize>,
    prev: Vec<usize>,
}

/// Flat indices of a point and its four periodic neighbours.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    p: usize,
    xp: usize,
    xm: usize,
    yp: usize,
    ym: usize,
}

impl NavierStokesProblem {
    pub const MIN_GRID: usize = 4;

    pub fn new(n: usize, nu: f64) -> Result<Self> {
        if n < Self::MIN_GRID {
            return Err(Error::GridTooSmall {
                min: Self::MIN_GRID,
                got: n,
            });
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "viscosity must be non-negative, got {nu}"
            )));
        }
        Ok(Self {
            n,
            h: 1.0 / n as f64,
            nu,
            next: (0..n).map(|i| (i + 1) % n).collect(),
            prev: (0..n).map(|i| (i + n - 1) % n).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Grid points per field, `N = n²`.
    pub fn grid_size(&self) -> usize {
        self.n * self.n
    }

    fn stencils(&self) -> impl Iterator<Item = Stencil> + '_ {
        let n = self.n;
        (0..n).flat_map(move |j| {
            let row = j * n;
            let row_p = self.next[j] * n;
            let row_m = self.prev[j] * n;
            (0..n).map(move |i| Stencil {
                p: row + i,
                xp: row + self.next[i],
                xm: row + self.prev[i],
                yp: row_p + i,
                ym: row_m + i,
            })
        })
    }

    fn split<'a>(&self, state: &'a [f64]) -> Result<(&'a [f64], &'a [f64], &'a [f64])> {
        let big_n = self.grid_size();
        if state.len() != 3 * big_n {
            return Err(Error::LengthMismatch {
                expected: 3 * big_n,
                actual: state.len(),
            });
        }
        let (rho, rest) = state.split_at(big_n);
        let (u, v) = rest.split_at(big_n);
        Ok((rho, u, v))
    }

    fn check_density(&self, rho: &[f64]) -> Result<()> {
        match rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            Some((index, _)) => Err(Error::NonPositiveDensity {
                index,
                min: rho.iter().copied().fold(f64::INFINITY, f64::min),
            }),
            None => Ok(()),
        }
    }

    /// Right-hand side without touching a counter.
    pub fn rhs_uncounted(&self, state: &[f64]) -> Result<StateVector> {
        let (rho, u, v) = self.split(state)?;
        self.check_density(rho)?;
        let big_n = self.grid_size();
        let d = 0.5 / self.h;
        let lap = self.nu / (self.h * self.h);
        let mut out = vec![0.0; 3 * big_n];
        let (f1, rest) = out.split_at_mut(big_n);
        let (f2, f3) = rest.split_at_mut(big_n);
        for s in self.stencils() {
            let Stencil { p, xp, xm, yp, ym } = s;
            f1[p] =
                -d * (rho[xp] * u[xp] - rho[xm] * u[xm]) - d * (rho[yp] * v[yp] - rho[ym] * v[ym]);
            let ux = d * (u[xp] - u[xm]);
            let uy = d * (u[yp] - u[ym]);
            let vx = d * (v[xp] - v[xm]);
            let vy = d * (v[yp] - v[ym]);
            let rx = d * (rho[xp] - rho[xm]);
            let ry = d * (rho[yp] - rho[ym]);
            let lap_u = lap * (u[xp] + u[xm] + u[yp] + u[ym] - 4.0 * u[p]);
            let lap_v = lap * (v[xp] + v[xm] + v[yp] + v[ym] - 4.0 * v[p]);
            f2[p] = -u[p] * ux - v[p] * uy - rx / rho[p] + lap_u;
            f3[p] = -u[p] * vx - v[p] * vy - ry / rho[p] + lap_v;
        }
        Ok(StateVector::from(out))
    }

    /// Jacobian action without touching a counter.
    pub fn jac_action_uncounted(&self, state: &[f64], w: &[f64]) -> Result<StateVector> {
        let (rho, u, v) = self.split(state)?;
        let (w1, w2, w3) = self.split(w)?;
        self.check_density(rho)?;
        let big_n = self.grid_size();
        let d = 0.5 / self.h;
        let lap = self.nu / (self.h * self.h);
        let mut out = vec![0.0; 3 * big_n];
        let (j1, rest) = out.split_at_mut(big_n);
        let (j2, j3) = rest.split_at_mut(big_n);
        for s in self.stencils() {
            let Stencil { p, xp, xm, yp, ym } = s;
            j1[p] = -d * (u[xp] * w1[xp] - u[xm] * w1[xm])
                - d * (v[yp] * w1[yp] - v[ym] * w1[ym])
                - d * (rho[xp] * w2[xp] - rho[xm] * w2[xm])
                - d * (rho[yp] * w3[yp] - rho[ym] * w3[ym]);
            let inv_rho = 1.0 / rho[p];
            let rx = d * (rho[xp] - rho[xm]);
            let ry = d * (rho[yp] - rho[ym]);
            let ux = d * (u[xp] - u[xm]);
            let uy = d * (u[yp] - u[ym]);
            let vx = d * (v[xp] - v[xm]);
            let vy = d * (v[yp] - v[ym]);
            let w1x = d * (w1[xp] - w1[xm]);
            let w1y = d * (w1[yp] - w1[ym]);
            let w2x = d * (w2[xp] - w2[xm]);
            let w2y = d * (w2[yp] - w2[ym]);
            let w3x = d * (w3[xp] - w3[xm]);
            let w3y = d * (w3[yp] - w3[ym]);
            let lap_w2 = lap * (w2[xp] + w2[xm] + w2[yp] + w2[ym] - 4.0 * w2[p]);
            let lap_w3 = lap * (w3[xp] + w3[xm] + w3[yp] + w3[ym] - 4.0 * w3[p]);
            let density_term = w1[p] * inv_rho * inv_rho;
            j2[p] = density_term * rx
                - inv_rho * w1x
                - w2[p] * ux
                - u[p] * w2x
                - w3[p] * uy
                - v[p] * w2y
                + lap_w2;
            j3[p] = density_term * ry
                - inv_rho * w1y
                - w2[p] * vx
                - u[p] * w3x
                - w3[p] * vy
                - v[p] * w3y
                + lap_w3;
        }
        Ok(StateVector::from(out))
    }

    /// Gershgorin `(diagonal, radius)` pairs of the Jacobian at `state`,
    /// one per row of the `3N x 3N` matrix.
    pub fn jacobian_gershgorin_rows(&self, state: &[f64]) -> Result<Vec<(f64, f64)>> {
        let (rho, u, v) = self.split(state)?;
        self.check_density(rho)?;
        let big_n = self.grid_size();
        let d = 0.5 / self.h;
        let lap = self.nu / (self.h * self.h);
        let mut rows = vec![(0.0, 0.0); 3 * big_n];
        for s in self.stencils() {
            let Stencil { p, xp, xm, yp, ym } = s;
            // continuity row: no diagonal entry
            let r1 = d * (u[xp].abs() + u[xm].abs() + v[yp].abs() + v[ym].abs())
                + d * (rho[xp].abs() + rho[xm].abs() + rho[yp].abs() + rho[ym].abs());
            rows[p] = (0.0, r1);

            let inv_rho = 1.0 / rho[p];
            let rx = d * (rho[xp] - rho[xm]);
            let ry = d * (rho[yp] - rho[ym]);
            let ux = d * (u[xp] - u[xm]);
            let uy = d * (u[yp] - u[ym]);
            let vx = d * (v[xp] - v[xm]);
            let vy = d * (v[yp] - v[ym]);
            let density = rx.abs() * inv_rho * inv_rho;
            let density_y = ry.abs() * inv_rho * inv_rho;
            let pressure = 2.0 * d * inv_rho;
            let transport = (-u[p] * d + lap).abs()
                + (u[p] * d + lap).abs()
                + (-v[p] * d + lap).abs()
                + (v[p] * d + lap).abs();

            let diag_u = -ux - 4.0 * lap;
            rows[big_n + p] = (diag_u, density + pressure + transport + uy.abs());

            let diag_v = -vy - 4.0 * lap;
            rows[2 * big_n + p] = (diag_v, density_y + pressure + transport + vx.abs());
        }
        Ok(rows)
    }

    /// Shear-flow initial data: `rho = 1`, a double `tanh` profile for `u`
    /// switching at `y = 1/2`, and a sinusoidal perturbation of `v`.
    pub fn shear_flow_init(&self, v0: f64, d: f64, delta: f64) -> StateVector {
        shear_flow_init(self.n, v0, d, delta)
    }

    /// Shear-flow data with `v0 = 0.1`, `d = 1/30`, `delta = 5e-3`.
    pub fn default_initial_state(&self) -> StateVector {
        self.shear_flow_init(0.1, 1.0 / 30.0, 5e-3)
    }

    /// `Dx v - Dy u` on the grid.
    pub fn vorticity(&self, state: &[f64]) -> Result<Grid2DField> {
        let (_, u, v) = self.split(state)?;
        let d = 0.5 / self.h;
        let mut w = vec![0.0; self.grid_size()];
        for s in self.stencils() {
            w[s.p] = d * (v[s.xp] - v[s.xm]) - d * (u[s.yp] - u[s.ym]);
        }
        Grid2DField::new(self.n, w)
    }

    /// Density, both velocity components and vorticity as named grids.
    pub fn fields(&self, state: &[f64]) -> Result<Vec<(&'static str, Grid2DField)>> {
        let (rho, u, v) = self.split(state)?;
        Ok(vec![
            ("rho", Grid2DField::new(self.n, rho.to_vec())?),
            ("u", Grid2DField::new(self.n, u.to_vec())?),
            ("v", Grid2DField::new(self.n, v.to_vec())?),
            ("omega", self.vorticity(state)?),
        ])
    }

    /// Sum of the density over the grid.
    pub fn total_mass(&self, state: &[f64]) -> Result<f64> {
        let (rho, _, _) = self.split(state)?;
        Ok(rho.iter().sum())
    }

    /// Shifts every field by `(di, dj)` cells with periodic wrap-around.
    pub fn shift_state(&self, state: &[f64], di: isize, dj: isize) -> Result<StateVector> {
        let big_n = self.grid_size();
        self.split(state)?;
        let n = self.n;
        let mut out = vec![0.0; 3 * big_n];
        for block in 0..3 {
            for j in 0..n as isize {
                for i in 0..n as isize {
                    let src = super::grid_index(n, i, j);
                    let dst = super::grid_index(n, i + di, j + dj);
                    out[block * big_n + dst] = state[block * big_n + src];
                }
            }
        }
        Ok(StateVector::from(out))
    }
}

/// Shear-flow initial state on an `n x n` grid (see
/// [`NavierStokesProblem::shear_flow_init`]).
pub fn shear_flow_init(n: usize, v0: f64, d: f64, delta: f64) -> StateVector {
    let h = 1.0 / n as f64;
    let big_n = n * n;
    let mut state = vec![0.0; 3 * big_n];
    for j in 0..n {
        let y = j as f64 * h;
        let u = if y <= 0.5 {
            v0 * ((y - 0.25) / d).tanh()
        } else {
            v0 * ((0.75 - y) / d).tanh()
        };
        for i in 0..n {
            let x = i as f64 * h;
            let p = j * n + i;
            state[p] = 1.0;
            state[big_n + p] = u;
            state[2 * big_n + p] = delta * (2.0 * PI * x).sin();
        }
    }
    StateVector::from(state)
}

impl Problem for NavierStokesProblem {
    fn dimension(&self) -> usize {
        3 * self.grid_size()
    }

    fn cost_table(&self) -> CostTable {
        CostTable::navier_stokes_2d(self.grid_size())
    }

    fn rhs(&self, u: &[f64], counter: &OpCounter) -> Result<StateVector> {
        let f = self.rhs_uncounted(u)?;
        counter.record(Primitive::Rhs)?;
        Ok(f)
    }

    fn jac_action(&self, u: &[f64], w: &[f64], counter: &OpCounter) -> Result<StateVector> {
        let y = self.jac_action_uncounted(u, w)?;
        counter.record(Primitive::Jacvec)?;
        Ok(y)
    }

    fn spectral_bounds(&self, u: &[f64]) -> Result<SpectralBounds> {
        Ok(bounds_from_rows(self.jacobian_gershgorin_rows(u)?))
    }

    fn validate_state(&self, u: &[f64]) -> Result<()> {
        let (rho, _, _) = self.split(u)?;
        self.check_density(rho)
    }
}
