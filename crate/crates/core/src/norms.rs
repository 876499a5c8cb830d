//! Lebesgue, Sobolev, Nikolskii and Gagliardo norms of grid fields.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{ExponentTable, ProblemParams};
use crate::field::{
    boundary_integrate_with, gradient, integrate, pairwise_sum, DomainKind, Grid, ScalarField, VectorField,
};

/// `(int |g|^r)^(1/r)`.
pub fn lp_norm(g: &ScalarField, r: f64) -> Result<f64> {
    Ok(integrate(&g.map(|v| v.abs().powf(r)))?.powf(1.0 / r))
}

/// `L^r` norm of the Euclidean length of a vector field.
pub fn lp_norm_vec(v: &VectorField, r: f64) -> Result<f64> {
    lp_norm(&v.magnitude(), r)
}

/// `||u||_{L^r} + ||grad u||_{L^r}`.
pub fn w1r_norm(u: &ScalarField, r: f64) -> Result<f64> {
    Ok(lp_norm(u, r)? + lp_norm_vec(&gradient(u)?, r)?)
}

/// `(int_{boundary} |g|^r)^(1/r)`.
pub fn boundary_lp_norm(g: &ScalarField, r: f64) -> f64 {
    boundary_integrate_with(g.grid(), |f| g[f.node].abs().powf(r)).powf(1.0 / r)
}

/// Boundary `L^r` norm of the length of a vector field.
pub fn boundary_lp_norm_vec(v: &VectorField, r: f64) -> f64 {
    boundary_integrate_with(v.grid(), |f| {
        let x = v[f.node];
        x[0].hypot(x[1]).powf(r)
    })
    .powf(1.0 / r)
}

/// A lattice shift `(di, dj)` and its physical length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shift {
    pub di: isize,
    pub dj: isize,
    pub len: f64,
}

/// Lattice shifts along the axes (and diagonals in 2D) up to half the
/// domain diameter, each with a non-degenerate shrunken domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSet {
    shifts: Vec<Shift>,
    cap: f64,
}

const TIE: f64 = 1e-12;

impl ShiftSet {
    pub fn for_grid(grid: &Grid) -> Result<Self> {
        Self::with_cap(grid, 0.5 * grid.diameter())
    }

    pub fn with_cap(grid: &Grid, cap: f64) -> Result<Self> {
        let [hx, hy] = grid.h();
        let dirs: &[(isize, isize)] = if grid.dim() == 1 { &[(1, 0)] } else { &[(1, 0), (0, 1), (1, 1), (1, -1)] };
        let mut shifts = Vec::new();
        for &(a, b) in dirs {
            for k in 1.. {
                let (di, dj) = (a * k, b * k);
                let len = (di as f64 * hx).hypot(dj as f64 * hy);
                if len > cap * (1.0 + TIE) {
                    break;
                }
                let s = Shift { di, dj, len };
                if shrunken_weights(grid, &s).iter().any(|(_, _, w)| *w > 0.0) {
                    shifts.push(s);
                }
            }
        }
        if shifts.is_empty() {
            return Err(Error::EmptyShiftSet(format!("no admissible shift below {cap}")));
        }
        Ok(ShiftSet { shifts, cap })
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.shifts
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }
}

/// Quadrature on `{x : dist(x, boundary) >= |h|}` restricted to nodes whose
/// shifted partner is active: `(node, partner, weight)`.
fn shrunken_weights(grid: &Grid, s: &Shift) -> Vec<(usize, usize, f64)> {
    let inside = |k: usize| grid.is_active(k) && grid.dist_to_boundary(k) >= s.len * (1.0 - TIE);
    let mut out = Vec::new();
    match grid.kind() {
        DomainKind::Disc => {
            let [hx, hy] = grid.h();
            for k in 0..grid.len() {
                if inside(k) {
                    if let Some(m) = grid.offset(k, s.di, s.dj).filter(|&m| grid.is_active(m)) {
                        out.push((k, m, hx * hy));
                    }
                }
            }
        }
        DomainKind::Interval | DomainKind::Rectangle => {
            let [nx, ny] = grid.n();
            let [hx, hy] = grid.h();
            let range = |n: usize, h: f64, len: f64| {
                let ok: Vec<usize> = (0..n).filter(|&i| {
                    let x = i as f64 * h;
                    x.min(len - x) >= s.len * (1.0 - TIE)
                }).collect();
                ok.first().copied().zip(ok.last().copied())
            };
            let ext = grid.extents();
            let rx = range(nx, hx, ext[0]);
            let ry = if grid.dim() == 1 { Some((0, 0)) } else { range(ny, hy, ext[1]) };
            let (Some((i0, i1)), Some((j0, j1))) = (rx, ry) else { return out };
            let axis_w = |i: usize, lo: usize, hi: usize, h: f64| {
                if lo == hi {
                    0.0
                } else if i == lo || i == hi {
                    0.5 * h
                } else {
                    h
                }
            };
            for j in j0..=j1 {
                let wy = if grid.dim() == 1 { 1.0 } else { axis_w(j, j0, j1, hy) };
                for i in i0..=i1 {
                    let k = grid.index(i, j);
                    if let Some(m) = grid.offset(k, s.di, s.dj) {
                        out.push((k, m, axis_w(i, i0, i1, hx) * wy));
                    }
                }
            }
        }
    }
    out
}

/// `int_{Omega_|h|} |grad u(x+h) - grad u(x)|^r / |h|^2` for every shift.
pub fn nikolskii_profile(u: &ScalarField, r: f64, shifts: &ShiftSet) -> Result<Vec<(Shift, f64)>> {
    let grad = gradient(u)?;
    let grid = u.grid();
    let vals: Vec<(Shift, f64)> = shifts
        .shifts()
        .par_iter()
        .map(|s| {
            let terms: Vec<f64> = shrunken_weights(grid, s)
                .into_iter()
                .map(|(k, m, w)| {
                    let d = [grad[m][0] - grad[k][0], grad[m][1] - grad[k][1]];
                    w * d[0].hypot(d[1]).powf(r)
                })
                .collect();
            (*s, pairwise_sum(&terms) / (s.len * s.len))
        })
        .collect();
    if let Some((s, _)) = vals.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteField(format!("difference quotient at shift {s:?}")));
    }
    Ok(vals)
}

/// `(sup_h int_{Omega_|h|} |grad u(x+h) - grad u(x)|^r / |h|^2)^(1/r)` over the default shift set.
pub fn nikolskii_seminorm(u: &ScalarField, r: f64) -> Result<f64> {
    let shifts = ShiftSet::for_grid(u.grid())?;
    nikolskii_seminorm_with(u, r, &shifts)
}

pub fn nikolskii_seminorm_with(u: &ScalarField, r: f64, shifts: &ShiftSet) -> Result<f64> {
    let prof = nikolskii_profile(u, r, shifts)?;
    Ok(prof.iter().map(|(_, v)| *v).fold(0.0, f64::max).powf(1.0 / r))
}

/// Base integrability exponent paired with `r_i`: `p` for `i in {1,4}`, `q` for `i in {2,3}`.
pub fn base_exponent(i: usize, params: &ProblemParams) -> f64 {
    match i {
        1 | 4 => params.p,
        _ => params.q,
    }
}

/// `||u||_{W^{1,base}} + [[u]]_{r_i}`.
pub fn nikolskii_norm(u: &ScalarField, table: &ExponentTable, i: usize, params: &ProblemParams) -> Result<f64> {
    Ok(w1r_norm(u, base_exponent(i, params))? + nikolskii_seminorm(u, table.r(i))?)
}

/// Discrete Gagliardo seminorm of order `delta` in `(0,1)`; pairs closer
/// than one mesh width are left out.
pub fn gagliardo_seminorm(g: &ScalarField, delta: f64, r: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OrderOutOfRange(delta));
    }
    let grid = g.grid();
    let [hx, hy] = grid.h();
    let cutoff = if grid.dim() == 1 { hx } else { hx.min(hy) };
    let cut2 = (cutoff * (1.0 - TIE)).powi(2);
    let expo = 0.5 * (grid.dim() as f64 + delta * r);
    let w = grid.weights();
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_active(k) && w[k] > 0.0).collect();
    let pts: Vec<[f64; 2]> = nodes.iter().map(|&k| grid.coords(k)).collect();
    let vals: Vec<f64> = nodes.iter().map(|&k| g[k]).collect();
    if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteField(format!("value {v} in Gagliardo seminorm")));
    }
    let integer_r = (r.fract() == 0.0 && r.abs() < 64.0).then_some(r as i32);
    let rows: Vec<f64> = (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let mut terms = Vec::with_capacity(nodes.len());
            for b in 0..nodes.len() {
                let dx = pts[a][0] - pts[b][0];
                let dy = pts[a][1] - pts[b][1];
                let d2 = dx * dx + dy * dy;
                if d2 < cut2 {
                    continue;
                }
                let diff = (vals[a] - vals[b]).abs();
                let num = match integer_r {
                    Some(k) => diff.powi(k),
                    None => diff.powf(r),
                };
                terms.push(w[nodes[b]] * num / d2.powf(expo));
            }
            w[nodes[a]] * pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows).powf(1.0 / r))
}

/// `||g||_{L^r} + [g]_{delta, r}`.
pub fn fractional_sobolev_norm(g: &ScalarField, delta: f64, r: f64) -> Result<f64> {
    Ok(lp_norm(g, r)? + gagliardo_seminorm(g, delta, r)?)
}
