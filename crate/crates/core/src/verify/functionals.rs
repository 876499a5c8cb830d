//! The energy functionals, `S_r`, and the boundary quantities.

use serde::Serialize;

use crate::error::Result;
use crate::exponents::ProblemParams;
use crate::field::{
    boundary_integrate_with, divergence, gradient, hessian, integrate, Mat2, MatrixField, ScalarField, Vec2,
    VectorField,
};
use crate::operator::FluxLaw;

/// Nodal gradient and Hessian of a field, computed once and shared.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub u: ScalarField,
    pub grad: VectorField,
    pub hess: MatrixField,
}

impl Derivatives {
    pub fn new(u: &ScalarField) -> Result<Self> {
        Ok(Derivatives { u: u.clone(), grad: gradient(u)?, hess: hessian(u)? })
    }

    fn sq(&self, k: usize) -> f64 {
        let g = self.grad[k];
        g[0] * g[0] + g[1] * g[1]
    }

    /// `D^2u grad u` at node `k`.
    fn hg(&self, k: usize) -> Vec2 {
        let (g, h) = (self.grad[k], self.hess[k]);
        [h[0][0] * g[0] + h[0][1] * g[1], h[1][0] * g[0] + h[1][1] * g[1]]
    }

    fn field(&self, f: impl Fn(usize) -> f64) -> ScalarField {
        let grid = self.u.grid().clone();
        ScalarField::from_fn(grid.clone(), |k| if grid.is_active(k) { f(k) } else { 0.0 })
    }
}

fn frob2(h: &Mat2) -> f64 {
    h[0][0] * h[0][0] + h[0][1] * h[0][1] + h[1][0] * h[1][0] + h[1][1] * h[1][1]
}

/// `I = I1 + I2 + I3` for one `(a, gamma, t, eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyFunctionals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
    /// `I2` with the integrand `(sum_{i,j} u_i u_ij)^2` instead of `(grad u^T D^2u grad u)^2`.
    pub i2_alt: f64,
    /// Smallest nodal value of the `I2` integrand.
    pub i2_integrand_min: f64,
    pub a: f64,
    pub gamma: f64,
    pub t: f64,
    pub eps: f64,
}

pub fn functional_i(u: &ScalarField, a: f64, gamma: f64, t: f64, eps: f64) -> Result<EnergyFunctionals> {
    functional_i_with(&Derivatives::new(u)?, a, gamma, t, eps)
}

pub fn functional_i_with(d: &Derivatives, a: f64, gamma: f64, t: f64, eps: f64) -> Result<EnergyFunctionals> {
    let w = |k: usize| d.sq(k) + eps;
    let i1 = gamma * (a - 2.0 + t) * integrate(&d.field(|k| {
        let g = d.hg(k);
        w(k).powf(0.5 * (a - 4.0 + t)) * (g[0] * g[0] + g[1] * g[1])
    }))?;
    let c2 = gamma * (a - 2.0) * t;
    let i2_density = d.field(|k| {
        let g = d.hg(k);
        let gu = d.grad[k];
        c2 * w(k).powf(0.5 * (a - 6.0 + t)) * (g[0] * gu[0] + g[1] * gu[1]).powi(2)
    });
    let i2 = integrate(&i2_density)?;
    let i2_alt = c2 * integrate(&d.field(|k| {
        let g = d.hg(k);
        w(k).powf(0.5 * (a - 6.0 + t)) * (g[0] + g[1]).powi(2)
    }))?;
    let i3 = gamma * integrate(&d.field(|k| w(k).powf(0.5 * (a - 2.0 + t)) * frob2(&d.hess[k])))?;
    let i2_integrand_min = i2_density.values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EnergyFunctionals { i1, i2, i3, total: i1 + i2 + i3, i2_alt, i2_integrand_min, a, gamma, t, eps })
}

/// `S_r = int |grad(w^((r-2)/4) grad u)|^2`, differentiating the auxiliary field discretely.
pub fn functional_s(u: &ScalarField, r: f64, eps: f64) -> Result<f64> {
    let grad = gradient(u)?;
    let v = VectorField::from_fn(u.grid().clone(), |k| {
        let g = grad[k];
        let c = (g[0] * g[0] + g[1] * g[1] + eps).powf(0.25 * (r - 2.0));
        [c * g[0], c * g[1]]
    });
    let j0 = gradient(&v.component(0))?;
    let j1 = gradient(&v.component(1))?;
    let grid = u.grid().clone();
    integrate(&ScalarField::from_fn(grid.clone(), |k| {
        if !grid.is_active(k) {
            return 0.0;
        }
        j0[k][0].powi(2) + j0[k][1].powi(2) + j1[k][0].powi(2) + j1[k][1].powi(2)
    }))
}

/// The three terms of the chain-rule expansion of `S_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SExpansion {
    pub hessian_term: f64,
    pub mixed_term: f64,
    pub gradient_term: f64,
}

impl SExpansion {
    pub fn total(&self) -> f64 {
        self.hessian_term + self.mixed_term + self.gradient_term
    }
}

pub fn s_expansion(d: &Derivatives, r: f64, eps: f64) -> Result<SExpansion> {
    let w = |k: usize| d.sq(k) + eps;
    let hg2 = |k: usize| {
        let g = d.hg(k);
        g[0] * g[0] + g[1] * g[1]
    };
    Ok(SExpansion {
        hessian_term: integrate(&d.field(|k| w(k).powf(0.5 * (r - 2.0)) * frob2(&d.hess[k])))?,
        mixed_term: (r - 2.0) * integrate(&d.field(|k| w(k).powf(0.5 * (r - 4.0)) * hg2(k)))?,
        gradient_term: 0.25
            * (r - 2.0).powi(2)
            * integrate(&d.field(|k| d.sq(k) * w(k).powf(0.5 * (r - 6.0)) * hg2(k)))?,
    })
}

/// Upper bound for `S_r`: `int w^((r-2)/2)|D^2u|^2 + ((r-2)(r+2)/4) int w^((r-4)/2)|D^2u grad u|^2`.
pub fn s_upper_bound(d: &Derivatives, r: f64, eps: f64) -> Result<f64> {
    let w = |k: usize| d.sq(k) + eps;
    let a = integrate(&d.field(|k| w(k).powf(0.5 * (r - 2.0)) * frob2(&d.hess[k])))?;
    let b = integrate(&d.field(|k| {
        let g = d.hg(k);
        w(k).powf(0.5 * (r - 4.0)) * (g[0] * g[0] + g[1] * g[1])
    }))?;
    Ok(a + 0.25 * (r - 2.0) * (r + 2.0) * b)
}

/// `D_u` and `G_u` at one boundary quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDG {
    pub node: usize,
    pub normal: Vec2,
    pub d: f64,
    pub g: f64,
}

pub fn boundary_dg(u: &ScalarField, t: f64, eps: f64, params: &ProblemParams) -> Result<Vec<BoundaryDG>> {
    let d = Derivatives::new(u)?;
    let law = FluxLaw::new(params).with_eps(eps);
    Ok(u.grid()
        .facets()
        .iter()
        .map(|f| {
            let k = f.node;
            let g = d.grad[k];
            let s2 = d.sq(k);
            let w = s2 + eps;
            let un = g[0] * f.normal[0] + g[1] * f.normal[1];
            let lap = d.hess[k][0][0] + d.hess[k][1][1];
            let gu = w.powf(0.5 * t) * un * lap + t * w.powf(0.5 * (t - 2.0)) * lap * un * s2;
            BoundaryDG { node: k, normal: f.normal, d: law.weight(s2), g: gu }
        })
        .collect())
}

/// `F_t = sum_{i,j} int_{boundary} A_i d_i(B_j) nu_j` with `A = D_u grad u`, `B = w^(t/2) grad u`.
pub fn boundary_f(u: &ScalarField, t: f64, eps: f64, params: &ProblemParams) -> Result<f64> {
    let grad = gradient(u)?;
    let law = FluxLaw::new(params).with_eps(eps);
    let b = VectorField::from_fn(u.grid().clone(), |k| {
        let g = grad[k];
        let c = (g[0] * g[0] + g[1] * g[1] + eps).powf(0.5 * t);
        [c * g[0], c * g[1]]
    });
    let jb = [gradient(&b.component(0))?, gradient(&b.component(1))?];
    Ok(boundary_integrate_with(u.grid(), |f| {
        let k = f.node;
        let g = grad[k];
        let dw = law.weight(g[0] * g[0] + g[1] * g[1]);
        let a = [dw * g[0], dw * g[1]];
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += a[i] * jb[j][k][i] * f.normal[j];
            }
        }
        acc
    }))
}

/// The two sides of the integration-by-parts identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentitySides {
    /// `int A . grad(-div B)`.
    pub lhs: f64,
    pub i_p: f64,
    pub i_q: f64,
    pub f_t: f64,
}

impl IdentitySides {
    pub fn rhs(&self) -> f64 {
        self.i_p + self.i_q - self.f_t
    }

    /// `|lhs - rhs| / (|lhs| + |I| + |F|)`.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.lhs.abs() + (self.i_p + self.i_q).abs() + self.f_t.abs();
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs()).abs() / scale
        }
    }
}

pub fn identity_sides(u: &ScalarField, t: f64, eps: f64, params: &ProblemParams) -> Result<IdentitySides> {
    let d = Derivatives::new(u)?;
    let law = FluxLaw::new(params).with_eps(eps);
    let grid = u.grid().clone();
    let b = VectorField::from_fn(grid.clone(), |k| {
        let g = d.grad[k];
        let c = (d.sq(k) + eps).powf(0.5 * t);
        [c * g[0], c * g[1]]
    });
    let grad_div = gradient(&divergence(&b)?)?;
    let lhs = integrate(&d.field(|k| {
        let g = d.grad[k];
        let dw = law.weight(d.sq(k));
        -dw * (g[0] * grad_div[k][0] + g[1] * grad_div[k][1])
    }))?;
    let i_p = functional_i_with(&d, params.p, params.alpha, t, eps)?.total;
    let i_q = if params.beta == 0.0 { 0.0 } else { functional_i_with(&d, params.q, params.beta, t, eps)?.total };
    Ok(IdentitySides { lhs, i_p, i_q, f_t: boundary_f(u, t, eps, params)? })
}
