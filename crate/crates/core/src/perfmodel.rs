//! Hardware-independent memory-operation cost model.
//!
//! Every state-vector-sized primitive (inner product, scaling, linear
//! combination, operator application, right-hand-side evaluation) is charged
//! the number of memory operations it needs when the vectors do not fit in
//! cache. Costs are recorded at the call sites, so a run's total is exact and
//! deterministic.
//!
//! Two tables exist. For the 1D advection-diffusion problem the unit is the
//! number of unknowns `n`:
//!
//! | fetch | store | scale | lincomb-k  | dot | matvec |
//! |-------|-------|-------|------------|-----|--------|
//! | n     | n     | 2n    | (k+1)n     | 2n  | 2n     |
//!
//! For the 2D Navier-Stokes problem the unit is the grid size `N = n²` and
//! every state vector holds three fields:
//!
//! | fetch | store | scale | lincomb-k  | dot | jacvec | rhs |
//! |-------|-------|-------|------------|-----|--------|-----|
//! | 3N    | 3N    | 6N    | 3(k+1)N    | 6N  | 21N    | 12N |
//!
//! Inner products are additionally weighted by `zeta` (1 on a desktop,
//! 10 as a stand-in for a distributed-memory machine).
//!
//! Small dense work (Hessenberg matrix functions, divided differences) is
//! not charged: it lives in cache.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostTableId {
    AdvDiff1d,
    NavierStokes2d,
}

impl CostTableId {
    pub fn as_str(self) -> &'static str {
        match self {
            CostTableId::AdvDiff1d => "advdiff-1d",
            CostTableId::NavierStokes2d => "navier-stokes-2d",
        }
    }
}

impl fmt::Display for CostTableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostTableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "advdiff-1d" => Ok(CostTableId::AdvDiff1d),
            "navier-stokes-2d" => Ok(CostTableId::NavierStokes2d),
            other => Err(Error::InvalidSpec(format!("unknown cost table {other}"))),
        }
    }
}

/// A countable primitive. `Lincomb(k)` is a linear combination of `k` vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Fetch,
    Store,
    Scale,
    Lincomb(usize),
    Dot,
    Matvec,
    Jacvec,
    Rhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostTable {
    id: CostTableId,
    unit: u64,
}

impl CostTable {
    /// Table for the 1D problem with `n` unknowns.
    pub fn advdiff_1d(n: usize) -> Self {
        Self {
            id: CostTableId::AdvDiff1d,
            unit: n as u64,
        }
    }

    /// Table for the 2D problem with `big_n = n²` grid points per field.
    pub fn navier_stokes_2d(big_n: usize) -> Self {
        Self {
            id: CostTableId::NavierStokes2d,
            unit: big_n as u64,
        }
    }

    pub fn id(&self) -> CostTableId {
        self.id
    }

    /// `n` for the 1D table, `N` for the Navier-Stokes table.
    pub fn unit(&self) -> u64 {
        self.unit
    }

    /// Memory operations of one primitive, before any `zeta` weighting.
    pub fn cost(&self, primitive: Primitive) -> Result<u64> {
        let u = self.unit;
        let not_in_table = || Error::PrimitiveNotInTable {
            primitive,
            table: self.id,
        };
        match self.id {
            CostTableId::AdvDiff1d => match primitive {
                Primitive::Fetch | Primitive::Store => Ok(u),
                Primitive::Scale | Primitive::Dot | Primitive::Matvec => Ok(2 * u),
                Primitive::Lincomb(k) => Ok((k as u64 + 1) * u),
                Primitive::Jacvec | Primitive::Rhs => Err(not_in_table()),
            },
            CostTableId::NavierStokes2d => match primitive {
                Primitive::Fetch | Primitive::Store => Ok(3 * u),
                Primitive::Scale | Primitive::Dot => Ok(6 * u),
                Primitive::Lincomb(k) => Ok(3 * (k as u64 + 1) * u),
                Primitive::Jacvec => Ok(21 * u),
                Primitive::Rhs => Ok(12 * u),
                Primitive::Matvec => Err(not_in_table()),
            },
        }
    }
}

/// Event counts per primitive. `lincomb_terms` accumulates `k + 1` over all
/// linear combinations so the total can be rebuilt from the counts alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub fetch: u64,
    pub store: u64,
    pub scale: u64,
    pub lincomb: u64,
    pub lincomb_terms: u64,
    pub dot: u64,
    pub matvec: u64,
    pub jacvec: u64,
    pub rhs: u64,
}

/// Per-run tally of counted primitives.
///
/// Interior mutability lets every evaluator share `&OpCounter` without
/// threading `&mut` through the call graph; a counter belongs to exactly one
/// run and is deliberately `!Sync`.
#[derive(Debug, Clone)]
pub struct OpCounter {
    table: CostTable,
    zeta: f64,
    counts: Cell<Counts>,
}

impl OpCounter {
    pub fn new(table: CostTable, zeta: f64) -> Result<Self> {
        if !zeta.is_finite() || zeta < 1.0 {
            return Err(Error::InvalidZeta(zeta));
        }
        Ok(Self {
            table,
            zeta,
            counts: Cell::new(Counts::default()),
        })
    }

    pub fn table(&self) -> CostTable {
        self.table
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn counts(&self) -> Counts {
        self.counts.get()
    }

    pub fn reset(&self) {
        self.counts.set(Counts::default());
    }

    pub fn record(&self, primitive: Primitive) -> Result<()> {
        // validates membership in the table
        self.table.cost(primitive)?;
        let mut c = self.counts.get();
        match primitive {
            Primitive::Fetch => c.fetch += 1,
            Primitive::Store => c.store += 1,
            Primitive::Scale => c.scale += 1,
            Primitive::Lincomb(k) => {
                c.lincomb += 1;
                c.lincomb_terms += k as u64 + 1;
            }
            Primitive::Dot => c.dot += 1,
            Primitive::Matvec => c.matvec += 1,
            Primitive::Jacvec => c.jacvec += 1,
            Primitive::Rhs => c.rhs += 1,
        }
        self.counts.set(c);
        Ok(())
    }

    /// Unweighted cost of one inner product.
    pub fn dot_base_cost(&self) -> u64 {
        // Dot is in every table.
        self.table.cost(Primitive::Dot).unwrap_or(0)
    }

    /// Memory operations per primitive class, dot already weighted by zeta.
    pub fn breakdown(&self) -> CostBreakdown {
        let c = self.counts.get();
        let t = &self.table;
        let unit_cost = |p: Primitive, count: u64| t.cost(p).map(|x| x * count).unwrap_or(0) as f64;
        // lincomb cost per (k+1) term equals the Lincomb(0) cost
        let lincomb = t.cost(Primitive::Lincomb(0)).unwrap_or(0) * c.lincomb_terms;
        CostBreakdown {
            fetch: unit_cost(Primitive::Fetch, c.fetch),
            store: unit_cost(Primitive::Store, c.store),
            scale: unit_cost(Primitive::Scale, c.scale),
            lincomb: lincomb as f64,
            dot: self.zeta * unit_cost(Primitive::Dot, c.dot),
            matvec: unit_cost(Primitive::Matvec, c.matvec),
            jacvec: unit_cost(Primitive::Jacvec, c.jacvec),
            rhs: unit_cost(Primitive::Rhs, c.rhs),
        }
    }

    /// Total memory operations, inner products weighted by zeta.
    pub fn total_cost(&self) -> f64 {
        self.breakdown().total()
    }

    /// Adds another counter's events into this one (same table required).
    pub fn absorb(&self, other: &OpCounter) {
        debug_assert_eq!(self.table, other.table);
        let mut c = self.counts.get();
        let o = other.counts.get();
        c.fetch += o.fetch;
        c.store += o.store;
        c.scale += o.scale;
        c.lincomb += o.lincomb;
        c.lincomb_terms += o.lincomb_terms;
        c.dot += o.dot;
        c.matvec += o.matvec;
        c.jacvec += o.jacvec;
        c.rhs += o.rhs;
        self.counts.set(c);
    }

    // Counted vector primitives.

    pub fn dot(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len(a.len(), b.len())?;
        self.record(Primitive::Dot)?;
        Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
    }

    /// Euclidean norm, charged as one inner product.
    pub fn norm(&self, a: &[f64]) -> Result<f64> {
        self.dot(a, a).map(f64::sqrt)
    }

    pub fn scale(&self, alpha: f64, u: &[f64]) -> Result<StateVector> {
        self.record(Primitive::Scale)?;
        Ok(StateVector::from(
            u.iter().map(|x| alpha * x).collect::<Vec<_>>(),
        ))
    }

    pub fn scale_in_place(&self, alpha: f64, u: &mut [f64]) -> Result<()> {
        self.record(Primitive::Scale)?;
        u.iter_mut().for_each(|x| *x *= alpha);
        Ok(())
    }

    /// `sum_i coeffs[i] * vecs[i]`, charged as a k-term linear combination.
    pub fn lincomb(&self, coeffs: &[f64], vecs: &[&[f64]]) -> Result<StateVector> {
        if vecs.is_empty() {
            return Err(Error::EmptyCombination);
        }
        if coeffs.len() != vecs.len() {
            return Err(Error::CoefficientCount {
                coeffs: coeffs.len(),
                vecs: vecs.len(),
            });
        }
        let len = vecs[0].len();
        for v in &vecs[1..] {
            check_len(len, v.len())?;
        }
        self.record(Primitive::Lincomb(vecs.len()))?;
        let mut out = vec![0.0; len];
        for (c, v) in coeffs.iter().zip(vecs) {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += c * x;
            }
        }
        Ok(StateVector::from(out))
    }

    /// `y <- y + alpha * x`, charged as a two-term linear combination.
    pub fn axpy(&self, alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len(y.len(), x.len())?;
        self.record(Primitive::Lincomb(2))?;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
        Ok(())
    }

    /// `y <- a * y + b * x`, charged as a two-term linear combination.
    pub fn axpby(&self, a: f64, y: &mut [f64], b: f64, x: &[f64]) -> Result<()> {
        check_len(y.len(), x.len())?;
        self.record(Primitive::Lincomb(2))?;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = a * *yi + b * xi;
        }
        Ok(())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        Err(Error::LengthMismatch { expected, actual })
    } else {
        Ok(())
    }
}

/// Per-primitive memory operations of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub fetch: f64,
    pub store: f64,
    pub scale: f64,
    pub lincomb: f64,
    pub dot: f64,
    pub matvec: f64,
    pub jacvec: f64,
    pub rhs: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.fetch
            + self.store
            + self.scale
            + self.lincomb
            + self.dot
            + self.matvec
            + self.jacvec
            + self.rhs
    }
}
