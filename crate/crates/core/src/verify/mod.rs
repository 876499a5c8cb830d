//! Numerical checks of the energy identities and a priori bounds.

mod checks;
pub mod constants;
mod functionals;
mod lemp;
mod theorem;

use serde::Serialize;

use crate::exponents::ProblemParams;
use crate::field::Grid;

pub use checks::{
    check_leme1, check_leme2, check_leme3, check_lemb3, check_prope1, check_prope2, check_s_identity,
    lemb3_constant, SOLUTION_TOL,
};
pub use functionals::{
    boundary_dg, boundary_f, functional_i, functional_i_with, functional_s, identity_sides, s_expansion,
    s_upper_bound, BoundaryDG, Derivatives, EnergyFunctionals, IdentitySides, SExpansion,
};
pub use lemp::{
    calibrate_lemp4, check_lemp4, check_lemp5, collinear_scan, lemp4_constant, lemp4_ratio, sample_sup, EPS_SET,
};
pub use theorem::{theorem_ratio, Theorem, TrajectoryPoint};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub dim: usize,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
}

impl GridMeta {
    pub fn of(grid: &Grid) -> Self {
        let d = grid.dim();
        GridMeta { dim: d, n: grid.n()[..d].to_vec(), h: grid.h()[..d].to_vec() }
    }
}

/// Outcome of one numerical check. `lhs` and `rhs` are the compared sides
/// (with any constant already applied to `rhs`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: Option<f64>,
    pub margin: f64,
    pub passed: bool,
    pub grid: Option<GridMeta>,
    pub eps: Option<f64>,
    pub params: Option<ProblemParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

/// Tolerance for discrete identities: `10 h (|lhs| + |rhs| + 1)`.
pub fn identity_tol(grid: &Grid, lhs: f64, rhs: f64) -> f64 {
    let h = grid.h()[..grid.dim()].iter().copied().fold(0.0, f64::max);
    10.0 * h * (lhs.abs() + rhs.abs() + 1.0)
}
