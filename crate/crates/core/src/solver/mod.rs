//! Newton continuation in the regularization parameter.

mod newton;
mod oracle;

pub use newton::{continuation_solve, continuation_solve_partial, solve_eps, Solution, SolveConfig, StageRecord};
pub use oracle::{invert_monotone_g, Oracle1d};
