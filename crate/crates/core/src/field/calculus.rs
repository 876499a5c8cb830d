use rayon::prelude::*;

use super::{pairwise_sum, BoundaryFacet, Grid, MatrixField, ScalarField, VectorField};
use crate::error::{Error, Result};

fn step(grid: &Grid, idx: usize, axis: usize, k: isize) -> Option<usize> {
    let (di, dj) = if axis == 0 { (k, 0) } else { (0, k) };
    grid.offset(idx, di, dj).filter(|&n| grid.is_active(n))
}

/// First derivative along `axis`: centred where both neighbours exist,
/// one-sided three-point otherwise.
fn d1(grid: &Grid, v: &[f64], idx: usize, axis: usize) -> f64 {
    let h = grid.h()[axis];
    let m1 = step(grid, idx, axis, -1);
    let p1 = step(grid, idx, axis, 1);
    match (m1, p1) {
        (Some(m), Some(p)) => (v[p] - v[m]) / (2.0 * h),
        _ => {
            let p2 = p1.and(step(grid, idx, axis, 2));
            let m2 = m1.and(step(grid, idx, axis, -2));
            if let (Some(a), Some(b)) = (p1, p2) {
                (-3.0 * v[idx] + 4.0 * v[a] - v[b]) / (2.0 * h)
            } else if let (Some(a), Some(b)) = (m1, m2) {
                (3.0 * v[idx] - 4.0 * v[a] + v[b]) / (2.0 * h)
            } else if let Some(a) = p1 {
                (v[a] - v[idx]) / h
            } else if let Some(a) = m1 {
                (v[idx] - v[a]) / h
            } else {
                0.0
            }
        }
    }
}

/// Second derivative along `axis`: centred three-point, or one-sided
/// four-point at the boundary.
fn d2(grid: &Grid, v: &[f64], idx: usize, axis: usize) -> f64 {
    let h = grid.h()[axis];
    let hh = h * h;
    let m1 = step(grid, idx, axis, -1);
    let p1 = step(grid, idx, axis, 1);
    if let (Some(m), Some(p)) = (m1, p1) {
        return (v[p] - 2.0 * v[idx] + v[m]) / hh;
    }
    let fwd: Vec<usize> = (1..=3).map_while(|k| step(grid, idx, axis, k)).collect();
    let bwd: Vec<usize> = (1..=3).map_while(|k| step(grid, idx, axis, -k)).collect();
    let side = if fwd.len() >= bwd.len() { &fwd } else { &bwd };
    match side.len() {
        3 => (2.0 * v[idx] - 5.0 * v[side[0]] + 4.0 * v[side[1]] - v[side[2]]) / hh,
        2 => (v[idx] - 2.0 * v[side[0]] + v[side[1]]) / hh,
        _ => 0.0,
    }
}

fn axis_derivative(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| if grid.is_active(k) { d1(grid, v, k, axis) } else { 0.0 })
        .collect()
}

/// Nodal gradient: centred differences inside, one-sided second order at
/// boundary nodes.
pub fn gradient(u: &ScalarField) -> Result<VectorField> {
    let grid = u.grid();
    grid.require_stencil_width()?;
    let dx = axis_derivative(grid, u.values(), 0);
    let values = if grid.dim() == 2 {
        let dy = axis_derivative(grid, u.values(), 1);
        dx.into_iter().zip(dy).map(|(a, b)| [a, b]).collect()
    } else {
        dx.into_iter().map(|a| [a, 0.0]).collect()
    };
    Ok(VectorField::new(grid.clone(), values))
}

/// Nodal Hessian. Mixed partials are the average of the two difference
/// orders, so the result is symmetric.
pub fn hessian(u: &ScalarField) -> Result<MatrixField> {
    let grid = u.grid();
    grid.require_stencil_width()?;
    let v = u.values();
    let g: &Grid = grid;
    let diag: Vec<[f64; 2]> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            if !g.is_active(k) {
                return [0.0, 0.0];
            }
            let xx = d2(g, v, k, 0);
            let yy = if g.dim() == 2 { d2(g, v, k, 1) } else { 0.0 };
            [xx, yy]
        })
        .collect();
    let values = if g.dim() == 2 {
        let ux = axis_derivative(g, v, 0);
        let uy = axis_derivative(g, v, 1);
        let uxy = axis_derivative(g, &ux, 1);
        let uyx = axis_derivative(g, &uy, 0);
        (0..g.len())
            .map(|k| {
                let m = 0.5 * (uxy[k] + uyx[k]);
                [[diag[k][0], m], [m, diag[k][1]]]
            })
            .collect()
    } else {
        diag.iter().map(|d| [[d[0], 0.0], [0.0, 0.0]]).collect()
    };
    Ok(MatrixField::new(grid.clone(), values))
}

/// Discrete divergence built from the same first-derivative stencils as [`gradient`].
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let grid = v.grid();
    grid.require_stencil_width()?;
    let vx: Vec<f64> = v.values().iter().map(|a| a[0]).collect();
    let mut out = axis_derivative(grid, &vx, 0);
    if grid.dim() == 2 {
        let vy: Vec<f64> = v.values().iter().map(|a| a[1]).collect();
        let dy = axis_derivative(grid, &vy, 1);
        out.iter_mut().zip(dy).for_each(|(a, b)| *a += b);
    }
    Ok(ScalarField::new(grid.clone(), out))
}

/// Composite trapezoidal quadrature (cut-cell weights on the disc).
pub fn integrate(g: &ScalarField) -> Result<f64> {
    let grid = g.grid();
    let w = grid.weights();
    let mut terms = Vec::with_capacity(grid.len());
    for (k, &v) in g.values().iter().enumerate() {
        if !grid.is_active(k) {
            continue;
        }
        if !v.is_finite() {
            let [x, y] = grid.coords(k);
            return Err(Error::NonFiniteField(format!("value {v} at node {k} ({x}, {y})")));
        }
        terms.push(w[k] * v);
    }
    Ok(pairwise_sum(&terms))
}

/// Boundary integral of the values of `g` at boundary nodes.
pub fn boundary_integrate(g: &ScalarField) -> f64 {
    boundary_integrate_with(g.grid(), |f| g[f.node])
}

/// Boundary integral of a facet-wise integrand (which may depend on the normal).
pub fn boundary_integrate_with(grid: &Grid, f: impl Fn(&BoundaryFacet) -> f64) -> f64 {
    let terms: Vec<f64> = grid.facets().iter().map(|fc| fc.weight * f(fc)).collect();
    pairwise_sum(&terms)
}
