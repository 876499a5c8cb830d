//! Discrete domains, fields over them, and the discrete calculus used by
//! the operator, the norms and the verification functionals.

mod calculus;
pub mod expr;
mod grid;

use std::io::Write;
use std::sync::Arc;

pub use calculus::{boundary_integrate, boundary_integrate_with, divergence, gradient, hessian, integrate};
pub use expr::{eval_expr, Expr};
pub use grid::{BoundaryFacet, DomainKind, Grid, NodeKind};

use crate::error::Result;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Deterministic pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    values: Vec<Vec2>,
}

#[derive(Debug, Clone)]
pub struct MatrixField {
    grid: Arc<Grid>,
    values: Vec<Mat2>,
}

macro_rules! field_common {
    ($ty:ident, $val:ty) => {
        impl $ty {
            /// Panics if `values` does not match the grid's node count.
            pub fn new(grid: Arc<Grid>, values: Vec<$val>) -> Self {
                assert_eq!(values.len(), grid.len(), "field length does not match grid");
                Self { grid, values }
            }

            pub fn from_fn(grid: Arc<Grid>, f: impl Fn(usize) -> $val) -> Self {
                let values = (0..grid.len()).map(f).collect();
                Self { grid, values }
            }

            pub fn grid(&self) -> &Arc<Grid> {
                &self.grid
            }

            pub fn values(&self) -> &[$val] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [$val] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<$val> {
                self.values
            }
        }

        impl std::ops::Index<usize> for $ty {
            type Output = $val;
            fn index(&self, k: usize) -> &$val {
                &self.values[k]
            }
        }
    };
}

field_common!(ScalarField, f64);
field_common!(VectorField, Vec2);
field_common!(MatrixField, Mat2);

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = (0..grid.len()).map(|k| if grid.is_active(k) { c } else { 0.0 }).collect();
        Self { grid, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Pointwise `self + c * other`.
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// Largest absolute value over active nodes.
    pub fn max_abs(&self) -> f64 {
        (0..self.values.len())
            .filter(|&k| self.grid.is_active(k))
            .map(|k| self.values[k].abs())
            .fold(0.0, f64::max)
    }

    /// Write one row per active node: `x[,y],value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.grid.dim();
        if dim == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for k in 0..self.values.len() {
            if !self.grid.is_active(k) {
                continue;
            }
            let [x, y] = self.grid.coords(k);
            if dim == 1 {
                writeln!(out, "{x},{}", self.values[k])?;
            } else {
                writeln!(out, "{x},{y},{}", self.values[k])?;
            }
        }
        Ok(())
    }
}

impl VectorField {
    pub fn component(&self, d: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| v[d]).collect() }
    }

    /// Euclidean length at every node.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v[0].hypot(v[1])).collect(),
        }
    }

    /// Pointwise `weight * self`.
    pub fn weighted(&self, weight: &ScalarField) -> Self {
        let values = self.values.iter().zip(weight.values()).map(|(v, w)| [w * v[0], w * v[1]]).collect();
        Self { grid: self.grid.clone(), values }
    }
}

impl MatrixField {
    /// Largest `|m_01 - m_10|` over the field.
    pub fn max_asymmetry(&self) -> f64 {
        self.values.iter().map(|m| (m[0][1] - m[1][0]).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Arc::new(Grid::interval(1.0, 3).unwrap());
        let u = ScalarField::from_fn(g, |k| k as f64);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,value\n0,0\n0.5,1\n1,2\n");
    }
}
