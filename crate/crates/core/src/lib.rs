//! Exponential Rosenbrock integrators on Krylov and Leja evaluators of
//! phi-function actions, the advection-dominated PDE problems they are
//! benchmarked on, and a memory-operation cost model for comparing them with
//! explicit Runge-Kutta methods.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod integrators;
pub mod linalg;
pub mod matfunc;
pub mod perfmodel;
pub mod problems;

pub use error::{Error, Result};
