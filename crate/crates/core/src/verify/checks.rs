use serde_json::json;

use crate::error::{Error, Result};
use crate::exponents::{ExponentTable, ProblemParams};
use crate::field::{boundary_integrate_with, gradient, ScalarField};
use crate::norms::{boundary_lp_norm, boundary_lp_norm_vec};
use crate::solver::Solution;

use super::functionals::{
    boundary_f, functional_i_with, functional_s, identity_sides, s_expansion, s_upper_bound, Derivatives,
};
use super::{identity_tol, CheckResult, GridMeta};

/// Residual above which a field is not accepted as a solution.
pub const SOLUTION_TOL: f64 = 1e-6;

pub fn check_leme1(u: &ScalarField, t: f64, eps: f64, params: &ProblemParams) -> Result<CheckResult> {
    let sides = identity_sides(u, t, eps, params)?;
    let (lhs, rhs) = (sides.lhs, sides.rhs());
    let tol = identity_tol(u.grid(), lhs, rhs);
    Ok(CheckResult {
        name: "leme1".into(),
        lhs,
        rhs,
        constant: None,
        margin: rhs - lhs,
        passed: (rhs - lhs).abs() <= tol,
        grid: Some(GridMeta::of(u.grid())),
        eps: Some(eps),
        params: Some(*params),
        detail: Some(json!({
            "t": t,
            "tol": tol,
            "relative_gap": sides.relative_gap(),
            "i_p": sides.i_p,
            "i_q": sides.i_q,
            "f_t": sides.f_t,
        })),
    })
}

pub fn check_leme2(u: &ScalarField, t: f64, eps: f64, params: &ProblemParams) -> Result<CheckResult> {
    if t < 0.0 {
        return Err(Error::Config(format!("leme2 needs t >= 0, got {t}")));
    }
    let d = Derivatives::new(u)?;
    let ip = functional_i_with(&d, params.p, params.alpha, t, eps)?;
    let iq = functional_i_with(&d, params.q, params.beta, t, eps)?;
    let lhs = ip.i2.min(iq.i2);
    let pointwise = ip.i2_integrand_min.min(iq.i2_integrand_min);
    Ok(CheckResult {
        name: "leme2".into(),
        lhs,
        rhs: 0.0,
        constant: None,
        margin: lhs,
        passed: lhs >= -1e-12 && pointwise >= 0.0,
        grid: Some(GridMeta::of(u.grid())),
        eps: Some(eps),
        params: Some(*params),
        detail: Some(json!({
            "t": t,
            "i2_p": ip.i2,
            "i2_q": iq.i2,
            "integrand_min": pointwise,
            "i2_alt_p": ip.i2_alt,
            "i2_alt_q": iq.i2_alt,
        })),
    })
}

fn h_max(u: &ScalarField) -> f64 {
    let g = u.grid();
    g.h()[..g.dim()].iter().copied().fold(0.0, f64::max)
}

/// `S_r` against its upper bound by the Hessian and mixed terms.
pub fn check_leme3(u: &ScalarField, r: f64, eps: f64) -> Result<CheckResult> {
    let d = Derivatives::new(u)?;
    let s = functional_s(u, r, eps)?;
    let bound = s_upper_bound(&d, r, eps)?;
    let tol = 10.0 * h_max(u).powi(2) * (s.abs() + bound.abs() + 1.0);
    Ok(CheckResult {
        name: "leme3".into(),
        lhs: s,
        rhs: bound,
        constant: Some(0.25 * (r - 2.0) * (r + 2.0)),
        margin: bound - s,
        passed: bound - s >= -tol,
        grid: Some(GridMeta::of(u.grid())),
        eps: Some(eps),
        params: None,
        detail: Some(json!({"r": r, "tol": tol})),
    })
}

/// `S_r` computed from the auxiliary field against its chain-rule expansion.
pub fn check_s_identity(u: &ScalarField, r: f64, eps: f64) -> Result<CheckResult> {
    let d = Derivatives::new(u)?;
    let s = functional_s(u, r, eps)?;
    let e = s_expansion(&d, r, eps)?;
    let tol = identity_tol(u.grid(), s, e.total());
    Ok(CheckResult {
        name: "leme3_identity".into(),
        lhs: s,
        rhs: e.total(),
        constant: None,
        margin: e.total() - s,
        passed: (e.total() - s).abs() <= tol,
        grid: Some(GridMeta::of(u.grid())),
        eps: Some(eps),
        params: None,
        detail: Some(json!({"r": r, "tol": tol, "terms": e})),
    })
}

fn energy_bound(
    name: &str,
    u: &ScalarField,
    params: &ProblemParams,
    t: f64,
    c: f64,
    weights: [f64; 2],
    radii: [f64; 2],
) -> Result<CheckResult> {
    if t < 0.0 {
        return Err(Error::Config(format!("{name} needs t >= 0, got {t}")));
    }
    let eps = params.eps;
    let d = Derivatives::new(u)?;
    let lhs = functional_i_with(&d, params.p, params.alpha, t, eps)?.total
        + functional_i_with(&d, params.q, params.beta, t, eps)?.total;
    let s = [functional_s(u, radii[0], eps)?, functional_s(u, radii[1], eps)?];
    let rhs = c * (weights[0] * s[0] + weights[1] * s[1]);
    let tol = identity_tol(u.grid(), lhs, rhs);
    Ok(CheckResult {
        name: name.into(),
        lhs,
        rhs,
        constant: Some(c),
        margin: lhs - rhs,
        passed: lhs - rhs >= -tol,
        grid: Some(GridMeta::of(u.grid())),
        eps: Some(eps),
        params: Some(*params),
        detail: Some(json!({"t": t, "tol": tol, "s": s, "r": radii})),
    })
}

/// `I_{t1} >= C1 (alpha S_{r1} + beta S_{r3})`.
pub fn check_prope1(u: &ScalarField, params: &ProblemParams, table: &ExponentTable) -> Result<CheckResult> {
    let c = (4.0 / (table.r1 + 2.0)).min(4.0 / (table.r3 + 2.0)).min(1.0);
    energy_bound("prope1", u, params, table.t1, c, [params.alpha, params.beta], [table.r1, table.r3])
}

/// `I_{t2} >= C (S_{r2} + S_{r4})` with `C = min(4 beta/(r2+2), 4 alpha/(r4+2))`.
pub fn check_prope2(u: &ScalarField, params: &ProblemParams, table: &ExponentTable) -> Result<CheckResult> {
    if !(params.beta > 0.0) {
        return Err(Error::InapplicableTheorem { which: "prope2".into(), reason: "requires beta > 0".into() });
    }
    let c = (4.0 * params.beta / (table.r2 + 2.0)).min(4.0 * params.alpha / (table.r4 + 2.0));
    energy_bound("prope2", u, params, table.t2, c, [1.0, 1.0], [table.r2, table.r4])
}

/// Explicit constant for the boundary bound:
/// `max(1, (1+t)/(p-1)) * max(1, 2^((t-1)/2)) * max(1, |boundary|^(1/s'))`.
pub fn lemb3_constant(params: &ProblemParams, t: f64, boundary_measure: f64) -> f64 {
    let pointwise = 1f64.max((1.0 + t) / (params.p - 1.0));
    let split = 2f64.powf(0.5 * (t - 1.0)).max(1.0);
    let s_conj = params.s / (params.s - 1.0);
    pointwise * split * boundary_measure.powf(1.0 / s_conj).max(1.0)
}

pub fn check_lemb3(sol: &Solution, f_used: &ScalarField, t: f64, params: &ProblemParams) -> Result<CheckResult> {
    if sol.residual_norm > SOLUTION_TOL {
        return Err(Error::NotASolution { residual: sol.residual_norm, tol: SOLUTION_TOL });
    }
    if !(t > -1.0) {
        return Err(Error::Config(format!("lemb3 needs t > -1, got {t}")));
    }
    let u = &sol.u;
    let eps = sol.eps;
    let f_t = boundary_f(u, t, eps, params)?;
    let s_conj = params.s / (params.s - 1.0);
    let grad = gradient(u)?;
    let trace = boundary_lp_norm_vec(&grad, s_conj * (t + 1.0)).powf(t + 1.0);
    let bracket = boundary_lp_norm(f_used, params.s) * (trace + eps.powf(0.5 * (t + 1.0)));
    let measure = boundary_integrate_with(u.grid(), |_| 1.0);
    let c = lemb3_constant(params, t, measure);
    let ratio = if bracket > 0.0 { f_t.abs() / bracket } else { 0.0 };
    Ok(CheckResult {
        name: "lemb3".into(),
        lhs: f_t.abs(),
        rhs: c * bracket,
        constant: Some(c),
        margin: c * bracket - f_t.abs(),
        passed: f_t.abs() <= c * bracket,
        grid: Some(GridMeta::of(u.grid())),
        eps: Some(eps),
        params: Some(params.with_eps(eps)),
        detail: Some(json!({"t": t, "ratio": ratio, "bracket": bracket})),
    })
}
