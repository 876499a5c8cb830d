use std::sync::Arc;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::field::{pairwise_sum, Grid, ScalarField};
use crate::operator::{Discretization, FluxLaw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Strictly decreasing values in (0, 1].
    pub eps_schedule: Vec<f64>,
    /// Target for the mass-weighted residual norm.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Relative tolerance of the inner conjugate-gradient solve.
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            eps_schedule: SolveConfig::geometric_schedule(1e-6),
            newton_tol: 1e-8,
            max_newton_iters: 60,
            linear_tol: 1e-8,
            max_linear_iters: 20_000,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

impl SolveConfig {
    /// `1, 1/2, 1/4, ...` while above `eps_min`, then `eps_min` itself.
    pub fn geometric_schedule(eps_min: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = 1.0;
        while e > eps_min * (1.0 + 1e-12) {
            out.push(e);
            e *= 0.5;
        }
        out.push(eps_min);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SolveConfig(m));
        if self.eps_schedule.is_empty() {
            return bad("eps_schedule is empty".into());
        }
        for w in self.eps_schedule.windows(2) {
            if w[1] >= w[0] {
                return bad(format!("eps_schedule must be strictly decreasing ({} then {})", w[0], w[1]));
            }
        }
        if let Some(e) = self.eps_schedule.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("eps_schedule entry {e} is outside (0,1]"));
        }
        if !(self.newton_tol > 0.0) || !(self.linear_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_newton_iters == 0 || self.max_linear_iters == 0 {
            return bad("iteration caps must be positive".into());
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("line search constants out of range".into());
        }
        Ok(())
    }
}

/// Per-iteration record, kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub residual: f64,
    pub energy: f64,
    pub step: f64,
    pub linear_iters: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: ScalarField,
    pub eps: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub linear_iters: usize,
    pub energy: f64,
    pub history: Vec<StageRecord>,
}

struct Problem<'a> {
    disc: &'a Discretization,
    law: FluxLaw,
    f: &'a [f64],
}

impl Problem<'_> {
    /// Raw energy gradient restricted to the free nodes.
    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.disc.flux_gradient(u, &self.law)?;
        let m = self.disc.mass();
        for (k, v) in g.iter_mut().enumerate() {
            *v = if self.disc.free()[k] { *v - m[k] * self.f[k] } else { 0.0 };
        }
        Ok(g)
    }

    /// `sqrt(sum m_i r_i^2)` with `r_i = g_i / m_i`.
    fn residual_norm(&self, g: &[f64]) -> f64 {
        let m = self.disc.mass();
        let terms: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(k, v)| if self.disc.free()[k] { v * v / m[k] } else { 0.0 })
            .collect();
        pairwise_sum(&terms).sqrt()
    }

    fn energy(&self, u: &[f64]) -> Result<f64> {
        self.disc.energy(u, self.f, &self.law)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

/// Jacobi-preconditioned CG for `K d = b` on the free nodes. Returns the
/// iterate reached and the iteration count; an unconverged iterate is still
/// a descent direction.
fn pcg(problem: &Problem, u: &[f64], b: &[f64], tol: f64, max_iters: usize) -> Result<(Vec<f64>, usize)> {
    let tangent = problem.disc.tangent(u, &problem.law)?;
    let free = problem.disc.free();
    let diag = tangent.diagonal();
    let inv: Vec<f64> = diag
        .iter()
        .enumerate()
        .map(|(k, d)| if free[k] && *d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut dir = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iters {
        let mut kd = tangent.apply(&dir);
        for (k, v) in kd.iter_mut().enumerate() {
            if !free[k] {
                *v = 0.0;
            }
        }
        let curv = dot(&dir, &kd);
        if !(curv > 0.0) {
            return Ok((x, it));
        }
        let a = rz / curv;
        for k in 0..n {
            x[k] += a * dir[k];
            r[k] -= a * kd[k];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok((x, it));
        }
        for k in 0..n {
            z[k] = r[k] * inv[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            dir[k] = z[k] + beta * dir[k];
        }
    }
    Ok((x, max_iters))
}

/// Minimize the discrete energy at fixed `eps` by damped Newton.
pub fn solve_eps(
    f: &ScalarField,
    params: &ProblemParams,
    eps: f64,
    init: &ScalarField,
    cfg: &SolveConfig,
) -> Result<Solution> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::SolveConfig(format!("eps = {eps} is outside (0,1]")));
    }
    let grid: Arc<Grid> = f.grid().clone();
    grid.require_stencil_width()?;
    for k in grid.boundary_nodes() {
        if init[k].abs() > 1e-12 {
            return Err(Error::BoundaryViolation { node: k, value: init[k] });
        }
    }
    let disc = Discretization::new(grid.clone())?;
    let problem = Problem { disc: &disc, law: FluxLaw::new(params).with_eps(eps), f: f.values() };
    let mut u: Vec<f64> = init
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| if disc.free()[k] { *v } else { 0.0 })
        .collect();
    let mut g = problem.gradient(&u)?;
    let mut res = problem.residual_norm(&g);
    let mut energy = problem.energy(&u)?;
    let mut history = vec![StageRecord { residual: res, energy, step: 0.0, linear_iters: 0 }];
    let mut linear_total = 0;
    let mut iters = 0;
    while res > cfg.newton_tol {
        if iters == cfg.max_newton_iters {
            return Err(Error::NoConvergence { iters, residual: res, eps });
        }
        iters += 1;
        let b: Vec<f64> = g.iter().map(|v| -v).collect();
        let (d, lin) = pcg(&problem, &u, &b, cfg.linear_tol, cfg.max_linear_iters)?;
        linear_total += lin;
        let slope = dot(&g, &d);
        let mut lambda = 1.0;
        let (next, next_energy, next_g, next_res) = loop {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            let trial_energy = match problem.energy(&trial) {
                Ok(e) => e,
                Err(Error::NonFiniteField(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if trial_energy <= energy + cfg.armijo * lambda * slope {
                let tg = problem.gradient(&trial)?;
                let tr = problem.residual_norm(&tg);
                break (trial, trial_energy, tg, tr);
            }
            // near the minimizer energy differences drown in rounding; fall
            // back to residual decrease there
            if slope.abs() <= 1e-12 * (1.0 + energy.abs()) && trial_energy.is_finite() {
                let tg = problem.gradient(&trial)?;
                let tr = problem.residual_norm(&tg);
                if tr < res {
                    break (trial, trial_energy.min(energy), tg, tr);
                }
            }
            lambda *= cfg.backtrack;
            if lambda < 1e-12 {
                return Err(Error::LineSearchStall { eps, residual: res });
            }
        };
        debug!("eps {eps:e} iter {iters} residual {next_res:e} step {lambda} cg {lin}");
        u = next;
        energy = next_energy;
        g = next_g;
        res = next_res;
        history.push(StageRecord { residual: res, energy, step: lambda, linear_iters: lin });
    }
    Ok(Solution {
        u: ScalarField::new(grid, u),
        eps,
        residual_norm: res,
        newton_iters: iters,
        linear_iters: linear_total,
        energy,
        history,
    })
}

/// Solve along the schedule, warm-starting each stage from the previous one.
/// On failure returns the completed stages together with the error.
pub fn continuation_solve_partial(
    f: &ScalarField,
    params: &ProblemParams,
    cfg: &SolveConfig,
) -> (Vec<Solution>, Option<Error>) {
    if let Err(e) = cfg.validate() {
        return (Vec::new(), Some(e));
    }
    if let Err(e) = params.validate() {
        return (Vec::new(), Some(e));
    }
    let mut out: Vec<Solution> = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        let zero;
        let init = match out.last() {
            Some(s) => &s.u,
            None => {
                zero = ScalarField::zeros(f.grid().clone());
                &zero
            }
        };
        match solve_eps(f, params, eps, init, cfg) {
            Ok(sol) => {
                info!("eps {eps:e}: {} newton, {} cg, residual {:e}", sol.newton_iters, sol.linear_iters, sol.residual_norm);
                out.push(sol);
            }
            Err(e) => return (out, Some(e)),
        }
    }
    (out, None)
}

pub fn continuation_solve(f: &ScalarField, params: &ProblemParams, cfg: &SolveConfig) -> Result<Vec<Solution>> {
    match continuation_solve_partial(f, params, cfg) {
        (sols, None) => Ok(sols),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProblemParams {
        ProblemParams { p: 3.0, q: 4.0, alpha: 1.0, beta: 1.0, s: 2.0, sigma: 0.75, eps: 1e-3 }
    }

    #[test]
    fn schedule_shape() {
        let s = SolveConfig::geometric_schedule(1e-3);
        assert_eq!(s[0], 1.0);
        assert_eq!(*s.last().unwrap(), 1e-3);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        let cfg = SolveConfig { eps_schedule: vec![0.1, 0.2], ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::SolveConfig(_))));
        let cfg = SolveConfig { eps_schedule: vec![], ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let g = Arc::new(Grid::rectangle(1.0, 1.0, 17, 17).unwrap());
        let f = ScalarField::zeros(g.clone());
        let sol = solve_eps(&f, &params(), 0.5, &ScalarField::zeros(g), &SolveConfig::default()).unwrap();
        assert!(sol.newton_iters <= 1);
        assert_eq!(sol.u.max_abs(), 0.0);
    }

    #[test]
    fn energy_decreases_and_residual_converges() {
        let g = Arc::new(Grid::rectangle(1.0, 1.0, 33, 33).unwrap());
        let f = ScalarField::constant(g.clone(), 4.0);
        let cfg = SolveConfig::default();
        let sol = solve_eps(&f, &params(), 0.01, &ScalarField::zeros(g), &cfg).unwrap();
        assert!(sol.residual_norm <= cfg.newton_tol);
        for w in sol.history.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-14 * w[0].energy.abs());
        }
    }

    #[test]
    fn init_must_vanish_on_boundary() {
        let g = Arc::new(Grid::interval(1.0, 17).unwrap());
        let f = ScalarField::zeros(g.clone());
        let init = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solve_eps(&f, &params(), 0.5, &init, &SolveConfig::default()),
            Err(Error::BoundaryViolation { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let g = Arc::new(Grid::interval(1.0, 65).unwrap());
        let f = ScalarField::constant(g.clone(), 50.0);
        let cfg = SolveConfig { max_newton_iters: 1, ..Default::default() };
        let e = solve_eps(&f, &params(), 1e-4, &ScalarField::zeros(g), &cfg).unwrap_err();
        assert!(matches!(e, Error::NoConvergence { iters: 1, .. }));
    }
}
