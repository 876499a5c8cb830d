//! The regularized (p,q)-Laplacian.
//!
//! Pointwise quantities (`pq_flux`, `flux_weight`) live on nodes and use the
//! nodal gradient. The operator itself is the exact gradient of a discrete
//! energy built on piecewise-linear elements (segments in 1D, two triangles
//! per cell in 2D) with a lumped mass, so that its linearization is
//! symmetric positive definite and Newton steps are descent directions for
//! the same energy the line search measures.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::field::{gradient, pairwise_sum, Grid, NodeKind, ScalarField, Vec2, VectorField};

/// The scalar constitutive law `xi -> D(|xi|^2) xi` with
/// `D(s) = alpha (s + eps)^((p-2)/2) + beta (s + eps)^((q-2)/2)`.
/// `eps = 0` is allowed here (exact oracle only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxLaw {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
}

impl FluxLaw {
    pub fn new(params: &ProblemParams) -> Self {
        FluxLaw { alpha: params.alpha, beta: params.beta, p: params.p, q: params.q, eps: params.eps }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Largest admissible `|grad u|^2`; beyond it the powers overflow.
    pub fn gradient_cap(&self) -> f64 {
        1e150_f64.powf(2.0 / self.q.max(self.p))
    }

    fn check(&self, s2: f64) -> Result<()> {
        if !s2.is_finite() || s2 > self.gradient_cap() {
            return Err(Error::NonFiniteField(format!(
                "|grad u|^2 = {s2:e} exceeds the overflow cap {:e}",
                self.gradient_cap()
            )));
        }
        Ok(())
    }

    /// Flux weight `D` at `s2 = |xi|^2`.
    pub fn weight(&self, s2: f64) -> f64 {
        let w = s2 + self.eps;
        let mut d = self.alpha * w.powf(0.5 * (self.p - 2.0));
        if self.beta != 0.0 {
            d += self.beta * w.powf(0.5 * (self.q - 2.0));
        }
        d
    }

    /// Coefficient of the rank-one part of the linearization,
    /// `alpha (p-2) w^((p-4)/2) + beta (q-2) w^((q-4)/2)`.
    pub fn rank_one(&self, s2: f64) -> f64 {
        let w = s2 + self.eps;
        let mut c = self.alpha * (self.p - 2.0) * w.powf(0.5 * (self.p - 4.0));
        if self.beta != 0.0 {
            c += self.beta * (self.q - 2.0) * w.powf(0.5 * (self.q - 4.0));
        }
        c
    }

    /// Energy density `(alpha/p) w^(p/2) + (beta/q) w^(q/2)`.
    pub fn potential(&self, s2: f64) -> f64 {
        let w = s2 + self.eps;
        let mut e = self.alpha / self.p * w.powf(0.5 * self.p);
        if self.beta != 0.0 {
            e += self.beta / self.q * w.powf(0.5 * self.q);
        }
        e
    }

    /// One-dimensional law `g(t) = D(t^2) t`; odd and strictly increasing.
    pub fn scalar(&self, t: f64) -> f64 {
        self.weight(t * t) * t
    }
}

/// Nodal flux weight `D_u`.
pub fn flux_weight(u: &ScalarField, params: &ProblemParams) -> Result<ScalarField> {
    let law = FluxLaw::new(params);
    let grad = gradient(u)?;
    let mut out = Vec::with_capacity(u.grid().len());
    for g in grad.values() {
        let s2 = g[0] * g[0] + g[1] * g[1];
        law.check(s2)?;
        out.push(law.weight(s2));
    }
    Ok(ScalarField::new(u.grid().clone(), out))
}

/// Nodal flux `D_u grad u`.
pub fn pq_flux(u: &ScalarField, params: &ProblemParams) -> Result<VectorField> {
    let law = FluxLaw::new(params);
    let grad = gradient(u)?;
    let mut out = Vec::with_capacity(u.grid().len());
    for g in grad.values() {
        let s2 = g[0] * g[0] + g[1] * g[1];
        law.check(s2)?;
        let d = law.weight(s2);
        out.push([d * g[0], d * g[1]]);
    }
    Ok(VectorField::new(u.grid().clone(), out))
}

#[derive(Debug, Clone)]
struct Element {
    nodes: [usize; 3],
    coef: [Vec2; 3],
    len: usize,
    measure: f64,
}

impl Element {
    fn grad(&self, v: &[f64]) -> Vec2 {
        let mut g = [0.0, 0.0];
        for k in 0..self.len {
            let x = v[self.nodes[k]];
            g[0] += self.coef[k][0] * x;
            g[1] += self.coef[k][1] * x;
        }
        g
    }
}

/// Piecewise-linear elements over the active part of a grid, with the
/// node-to-element incidence and lumped masses.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Arc<Grid>,
    elements: Vec<Element>,
    // CSR incidence: node -> (element, local index)
    offsets: Vec<usize>,
    incidence: Vec<(usize, usize)>,
    mass: Vec<f64>,
    free: Vec<bool>,
}

const PAR_MIN: usize = 4096;

fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if n < PAR_MIN {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().with_min_len(1024).map(f).collect()
    }
}

impl Discretization {
    pub fn new(grid: Arc<Grid>) -> Result<Self> {
        let mut elements = Vec::new();
        let [nx, ny] = grid.n();
        let [hx, hy] = grid.h();
        if grid.dim() == 1 {
            for i in 0..nx - 1 {
                elements.push(Element {
                    nodes: [i, i + 1, 0],
                    coef: [[-1.0 / hx, 0.0], [1.0 / hx, 0.0], [0.0, 0.0]],
                    len: 2,
                    measure: hx,
                });
            }
        } else {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let a = grid.index(i, j);
                    let b = grid.index(i + 1, j);
                    let c = grid.index(i + 1, j + 1);
                    let d = grid.index(i, j + 1);
                    let tri = [
                        ([a, b, c], [[-1.0 / hx, 0.0], [1.0 / hx, -1.0 / hy], [0.0, 1.0 / hy]]),
                        ([a, c, d], [[0.0, -1.0 / hy], [1.0 / hx, 0.0], [-1.0 / hx, 1.0 / hy]]),
                    ];
                    for (nodes, coef) in tri {
                        if nodes.iter().all(|&k| grid.is_active(k)) {
                            elements.push(Element { nodes, coef, len: 3, measure: 0.5 * hx * hy });
                        }
                    }
                }
            }
        }
        if elements.is_empty() {
            return Err(Error::DegenerateGrid("no elements".into()));
        }
        let n = grid.len();
        let mut count = vec![0usize; n + 1];
        let mut mass = vec![0.0; n];
        for e in &elements {
            for k in 0..e.len {
                count[e.nodes[k] + 1] += 1;
                mass[e.nodes[k]] += e.measure / e.len as f64;
            }
        }
        for k in 0..n {
            count[k + 1] += count[k];
        }
        let offsets = count.clone();
        let mut fill = count;
        let mut incidence = vec![(0, 0); offsets[n]];
        for (ei, e) in elements.iter().enumerate() {
            for k in 0..e.len {
                let node = e.nodes[k];
                incidence[fill[node]] = (ei, k);
                fill[node] += 1;
            }
        }
        let free = (0..n).map(|k| grid.node_kind(k) == NodeKind::Interior && mass[k] > 0.0).collect();
        Ok(Discretization { grid, elements, offsets, incidence, mass, free })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Lumped mass per node.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Unknowns of the Dirichlet problem (interior nodes).
    pub fn free(&self) -> &[bool] {
        &self.free
    }

    /// Gather per-element vectors `flux[e]` into nodal sums of `measure * coef . flux`.
    fn gather(&self, flux: &[Vec2]) -> Vec<f64> {
        par_map(self.grid.len(), |node| {
            let mut acc = 0.0;
            for &(ei, k) in &self.incidence[self.offsets[node]..self.offsets[node + 1]] {
                let e = &self.elements[ei];
                acc += e.measure * (e.coef[k][0] * flux[ei][0] + e.coef[k][1] * flux[ei][1]);
            }
            acc
        })
    }

    fn element_grads(&self, v: &[f64]) -> Vec<Vec2> {
        par_map(self.elements.len(), |ei| self.elements[ei].grad(v))
    }

    fn fluxes(&self, u: &[f64], law: &FluxLaw) -> Result<Vec<Vec2>> {
        let grads = self.element_grads(u);
        grads
            .iter()
            .map(|g| {
                let s2 = g[0] * g[0] + g[1] * g[1];
                law.check(s2)?;
                let d = law.weight(s2);
                Ok([d * g[0], d * g[1]])
            })
            .collect()
    }

    /// Raw derivative of the flux part of the energy with respect to each nodal value.
    pub fn flux_gradient(&self, u: &[f64], law: &FluxLaw) -> Result<Vec<f64>> {
        Ok(self.gather(&self.fluxes(u, law)?))
    }

    /// Discrete energy `sum_e |e| Phi(grad u_e) - sum_i m_i f_i u_i`.
    pub fn energy(&self, u: &[f64], f: &[f64], law: &FluxLaw) -> Result<f64> {
        let grads = self.element_grads(u);
        let mut terms = Vec::with_capacity(grads.len() + u.len());
        for (e, g) in self.elements.iter().zip(&grads) {
            let s2 = g[0] * g[0] + g[1] * g[1];
            law.check(s2)?;
            terms.push(e.measure * law.potential(s2));
        }
        for k in 0..u.len() {
            if self.mass[k] > 0.0 {
                terms.push(-self.mass[k] * f[k] * u[k]);
            }
        }
        Ok(pairwise_sum(&terms))
    }

    /// Linearization of the flux part at `u`.
    pub fn tangent(&self, u: &[f64], law: &FluxLaw) -> Result<Tangent<'_>> {
        let grads = self.element_grads(u);
        let mut tensors = Vec::with_capacity(grads.len());
        for g in &grads {
            let s2 = g[0] * g[0] + g[1] * g[1];
            law.check(s2)?;
            let d = law.weight(s2);
            let c = law.rank_one(s2);
            tensors.push([[d + c * g[0] * g[0], c * g[0] * g[1]], [c * g[0] * g[1], d + c * g[1] * g[1]]]);
        }
        Ok(Tangent { disc: self, tensors })
    }
}

/// The symmetric stiffness operator `w -> K(u) w` at a fixed state.
pub struct Tangent<'a> {
    disc: &'a Discretization,
    tensors: Vec<[[f64; 2]; 2]>,
}

impl Tangent<'_> {
    /// Raw product `K w` (all nodes; restrict to free nodes as needed).
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let grads = self.disc.element_grads(w);
        let flux: Vec<Vec2> = grads
            .iter()
            .zip(&self.tensors)
            .map(|(g, t)| [t[0][0] * g[0] + t[0][1] * g[1], t[1][0] * g[0] + t[1][1] * g[1]])
            .collect();
        self.disc.gather(&flux)
    }

    /// Diagonal of `K`.
    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.disc;
        par_map(d.grid.len(), |node| {
            let mut acc = 0.0;
            for &(ei, k) in &d.incidence[d.offsets[node]..d.offsets[node + 1]] {
                let e = &d.elements[ei];
                let c = e.coef[k];
                let t = &self.tensors[ei];
                acc += e.measure
                    * (c[0] * (t[0][0] * c[0] + t[0][1] * c[1]) + c[1] * (t[1][0] * c[0] + t[1][1] * c[1]));
            }
            acc
        })
    }
}

fn interior_scaled(disc: &Discretization, raw: Vec<f64>) -> Vec<f64> {
    raw.into_iter()
        .enumerate()
        .map(|(k, v)| if disc.free[k] { v / disc.mass[k] } else { 0.0 })
        .collect()
}

/// Discrete `-div(D_u grad u)` at interior nodes (zero elsewhere).
pub fn apply_operator(u: &ScalarField, params: &ProblemParams) -> Result<ScalarField> {
    let disc = Discretization::new(u.grid().clone())?;
    let raw = disc.flux_gradient(u.values(), &FluxLaw::new(params))?;
    Ok(ScalarField::new(u.grid().clone(), interior_scaled(&disc, raw)))
}

/// `apply_operator(u) - f` at interior nodes.
pub fn residual(u: &ScalarField, f: &ScalarField, params: &ProblemParams) -> Result<ScalarField> {
    let mut r = apply_operator(u, params)?;
    let grid = u.grid().clone();
    for (k, v) in r.values_mut().iter_mut().enumerate() {
        if grid.node_kind(k) == NodeKind::Interior {
            *v -= f[k];
        }
    }
    Ok(r)
}

/// Directional derivative of [`apply_operator`] at `u` in direction `w`.
pub fn jacobian_apply(u: &ScalarField, w: &ScalarField, params: &ProblemParams) -> Result<ScalarField> {
    let disc = Discretization::new(u.grid().clone())?;
    let tangent = disc.tangent(u.values(), &FluxLaw::new(params))?;
    Ok(ScalarField::new(u.grid().clone(), interior_scaled(&disc, tangent.apply(w.values()))))
}

fn require_dirichlet(u: &ScalarField) -> Result<()> {
    let grid = u.grid();
    for k in grid.boundary_nodes() {
        if u[k].abs() > 1e-12 {
            return Err(Error::BoundaryViolation { node: k, value: u[k] });
        }
    }
    Ok(())
}

/// `J_eps(u) = int (alpha/p) w^(p/2) + (beta/q) w^(q/2) - f u` for `u = 0` on the boundary.
pub fn energy(u: &ScalarField, f: &ScalarField, params: &ProblemParams) -> Result<f64> {
    require_dirichlet(u)?;
    let disc = Discretization::new(u.grid().clone())?;
    disc.energy(u.values(), f.values(), &FluxLaw::new(params))
}

/// Directional derivative of [`energy`]: `int flux(u) . grad w - f w` in the
/// element discretization.
pub fn energy_derivative(u: &ScalarField, f: &ScalarField, w: &ScalarField, params: &ProblemParams) -> Result<f64> {
    let disc = Discretization::new(u.grid().clone())?;
    let raw = disc.flux_gradient(u.values(), &FluxLaw::new(params))?;
    let terms: Vec<f64> = (0..raw.len())
        .map(|k| raw[k] * w[k] - disc.mass[k] * f[k] * w[k])
        .collect();
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::integrate;

    fn params(alpha: f64, beta: f64, p: f64, q: f64, eps: f64) -> ProblemParams {
        ProblemParams { p, q, alpha, beta, s: 2.0, sigma: 0.75, eps }
    }

    fn on(g: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_fn(g.clone(), |k| {
            let [x, y] = g.coords(k);
            f(x, y)
        })
    }

    #[test]
    fn flux_examples() {
        let g = Arc::new(Grid::interval(1.0, 33).unwrap());
        let zero = pq_flux(&ScalarField::zeros(g.clone()), &params(1.0, 1.0, 3.0, 4.0, 0.1)).unwrap();
        assert!(zero.values().iter().all(|v| v[0] == 0.0));
        let lin = on(&g, |x, _| x);
        let f = pq_flux(&lin, &params(1.0, 0.0, 3.0, 3.0, 1e-14)).unwrap();
        assert!(f.values().iter().all(|v| (v[0] - 1.0).abs() < 1e-6));
        let f = pq_flux(&lin, &params(1.0, 1.0, 3.0, 4.0, 1.0)).unwrap();
        let expect = 2f64.sqrt() + 2.0;
        assert!(f.values().iter().all(|v| (v[0] - expect).abs() < 1e-12));
    }

    #[test]
    fn overflow_is_an_error() {
        let g = Arc::new(Grid::interval(1.0, 9).unwrap());
        let steep = on(&g, |x, _| 1e80 * x);
        assert!(matches!(pq_flux(&steep, &params(1.0, 1.0, 3.0, 6.0, 0.1)), Err(Error::NonFiniteField(_))));
    }

    #[test]
    fn affine_has_zero_operator() {
        let g = Arc::new(Grid::rectangle(1.0, 1.0, 9, 9).unwrap());
        let u = on(&g, |x, y| 0.3 + 2.0 * x - y);
        let a = apply_operator(&u, &params(1.0, 1.0, 3.0, 4.0, 0.1)).unwrap();
        assert!(a.max_abs() < 1e-10, "{}", a.max_abs());
    }

    #[test]
    fn operator_on_sine_matches_symbolic_value() {
        // -( (u'^2+1)^(1/2) u' )' at x = 1/2 for u = sin(pi x) equals pi^2
        let g = Arc::new(Grid::interval(1.0, 257).unwrap());
        let u = on(&g, |x, _| (std::f64::consts::PI * x).sin());
        let a = apply_operator(&u, &params(1.0, 0.0, 3.0, 3.0, 1.0)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((a[128] - pi2).abs() < 1e-3 * pi2, "{}", a[128]);
    }

    #[test]
    fn energy_of_zero_field() {
        let g = Arc::new(Grid::rectangle(2.0, 1.0, 9, 5).unwrap());
        let pr = params(1.5, 0.5, 3.0, 4.0, 0.2);
        let e = energy(&ScalarField::zeros(g.clone()), &ScalarField::constant(g.clone(), 1.0), &pr).unwrap();
        let expect = 2.0 * (1.5 * 0.2f64.powf(1.5) / 3.0 + 0.5 * 0.2f64.powi(2) / 4.0);
        assert!((e - expect).abs() < 1e-14);
    }

    #[test]
    fn energy_requires_dirichlet_data() {
        let g = Arc::new(Grid::interval(1.0, 9).unwrap());
        let u = on(&g, |x, _| x);
        let f = ScalarField::zeros(g.clone());
        assert!(matches!(
            energy(&u, &f, &params(1.0, 0.0, 3.0, 3.0, 0.1)),
            Err(Error::BoundaryViolation { .. })
        ));
    }

    #[test]
    fn energy_directional_derivative_matches_finite_differences() {
        let g = Arc::new(Grid::rectangle(1.0, 1.0, 17, 17).unwrap());
        let pr = params(1.0, 0.7, 3.0, 4.5, 0.05);
        let pi = std::f64::consts::PI;
        let u = on(&g, |x, y| (pi * x).sin() * (pi * y).sin() * (1.0 + x));
        let w = on(&g, |x, y| x * (1.0 - x) * y * (1.0 - y) * (3.0 * y).cos());
        let f = on(&g, |x, y| 1.0 + x * y);
        let exact = energy_derivative(&u, &f, &w, &pr).unwrap();
        let d = 1e-5;
        let jp = energy(&u.axpy(d, &w), &f, &pr).unwrap();
        let jm = energy(&u.axpy(-d, &w), &f, &pr).unwrap();
        let fd = (jp - jm) / (2.0 * d);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "fd {fd} exact {exact}");
        // and the derivative is <A(u) - f, w> in the lumped inner product
        let r = residual(&u, &f, &pr).unwrap();
        let disc = Discretization::new(g.clone()).unwrap();
        let ip: f64 = (0..g.len()).map(|k| disc.mass()[k] * r[k] * w[k]).sum();
        assert!((ip - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn jacobian_is_consistent_and_elliptic() {
        let g = Arc::new(Grid::rectangle(1.0, 1.0, 13, 13).unwrap());
        let pr = params(1.0, 1.0, 3.0, 4.0, 0.1);
        let u = on(&g, |x, y| (2.0 * x).sin() * (y * y + 0.3));
        let w = on(&g, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let j = jacobian_apply(&u, &w, &pr).unwrap();
        let a0 = apply_operator(&u, &pr).unwrap();
        let gap = |d: f64| {
            let a1 = apply_operator(&u.axpy(d, &w), &pr).unwrap();
            (0..g.len()).map(|k| (a1[k] - a0[k] - d * j[k]).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (gap(1e-3), gap(5e-4));
        assert!(e1 / e2 > 3.5, "second-order remainder expected: {e1} {e2}");
        // ellipticity lower bound in the lumped inner product
        let disc = Discretization::new(g.clone()).unwrap();
        let form: f64 = (0..g.len()).map(|k| disc.mass()[k] * j[k] * w[k]).sum();
        let gw = gradient(&w).unwrap();
        let gw2 = integrate(&ScalarField::from_fn(g.clone(), |k| gw[k][0].powi(2) + gw[k][1].powi(2))).unwrap();
        assert!(form >= 0.1f64.sqrt() * gw2 * 0.9, "{form} vs {}", 0.1f64.sqrt() * gw2);
    }

    #[test]
    fn jacobian_at_zero_is_scaled_laplacian() {
        let g = Arc::new(Grid::interval(1.0, 65).unwrap());
        let pr = params(2.0, 1.0, 3.0, 4.0, 0.25);
        let w = on(&g, |x, _| x * (1.0 - x));
        let j = jacobian_apply(&ScalarField::zeros(g.clone()), &w, &pr).unwrap();
        let c = 2.0 * 0.25f64.sqrt() + 0.25;
        for k in 1..64 {
            assert!((j[k] - 2.0 * c).abs() < 1e-9, "{}", j[k]);
        }
    }
}
