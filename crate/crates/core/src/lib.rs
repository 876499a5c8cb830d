#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Regularity diagnostics for the regularized (p,q)-Laplacian Dirichlet problem
//! `-alpha Delta_p u - beta Delta_q u = f`, `u = 0` on the boundary.

pub mod cli;
pub mod error;
pub mod exponents;
pub mod field;
pub mod operator;
pub mod norms;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use exponents::{derive_exponents, ExponentTable, ProblemParams};
