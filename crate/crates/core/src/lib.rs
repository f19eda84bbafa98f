#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod coefficients;
pub mod error;
pub mod grid;
pub mod harness;
pub mod integrator;
pub mod levy;
pub mod operators;
pub mod problem;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
