use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exponents::{ExponentTable, ProblemParams};
use crate::field::ScalarField;
use crate::norms::{fractional_sobolev_norm, lp_norm, nikolskii_norm};
use crate::solver::Solution;

use super::{CheckResult, GridMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theorem {
    T1,
    T2,
    T3a,
    T3b,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [Theorem::T1, Theorem::T2, Theorem::T3a, Theorem::T3b];

    /// Which `r_i` the estimate controls.
    pub fn index(self) -> usize {
        match self {
            Theorem::T1 => 1,
            Theorem::T2 => 2,
            Theorem::T3a => 3,
            Theorem::T3b => 4,
        }
    }

    pub fn applicable(self, table: &ExponentTable) -> Result<()> {
        let (ok, reason) = match self {
            Theorem::T1 => (table.thm1, ""),
            Theorem::T2 => (table.thm2, "requires beta > 0"),
            Theorem::T3a => (table.thm3a, "requires beta > 0 and s >= (q+p-4)/(p-2)"),
            Theorem::T3b => (table.thm3b, "requires beta > 0, p < q < p+1 and s >= 1 + 1/(1+p-q)"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InapplicableTheorem { which: self.to_string(), reason: reason.into() })
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Theorem::T1 => "T1",
            Theorem::T2 => "T2",
            Theorem::T3a => "T3a",
            Theorem::T3b => "T3b",
        };
        f.write_str(s)
    }
}

impl FromStr for Theorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown theorem {s:?}")))
    }
}

/// One point of a ratio trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_ratio: Option<f64>,
}

struct DataNorms {
    fractional: f64,
    dual: f64,
    integrability: f64,
    ls: f64,
}

/// Right-hand side of the estimate without its constant; the data part is
/// computed once per grid.
fn data_norms(f: &ScalarField, params: &ProblemParams, table: &ExponentTable, which: Theorem) -> Result<DataNorms> {
    let i = which.index();
    let base = if i == 1 || i == 4 { params.p } else { params.q };
    let conj = base / (base - 1.0);
    let ls = lp_norm(f, params.s)?;
    let integrability = match which {
        Theorem::T1 | Theorem::T2 => ls.powf(params.s),
        Theorem::T3a => ls.powf(table.tau),
        Theorem::T3b => lp_norm(f, table.rho)?.powf(table.rho),
    };
    Ok(DataNorms {
        fractional: fractional_sobolev_norm(f, params.sigma, params.s)?,
        dual: lp_norm(f, conj)?,
        integrability,
        ls,
    })
}

fn bracket(d: &DataNorms, params: &ProblemParams, table: &ExponentTable, which: Theorem, eps: f64) -> f64 {
    let i = which.index();
    let base = if i == 1 || i == 4 { params.p } else { params.q };
    let r = table.r(i);
    let e = r / (base - 1.0);
    d.fractional.powf(e)
        + d.dual.powf(e)
        + d.integrability
        + d.ls * d.ls
        + eps.powf(0.5 * (table.t(i) + 1.0)) * d.fractional
        + eps.powf(0.5 * params.s * (r - 2.0))
}

fn trajectory(
    sols: &[Solution],
    f: &ScalarField,
    params: &ProblemParams,
    table: &ExponentTable,
    which: Theorem,
) -> Result<Vec<TrajectoryPoint>> {
    let d = data_norms(f, params, table, which)?;
    let i = which.index();
    sols.iter()
        .map(|s| {
            let lhs = nikolskii_norm(&s.u, table, i, params)?.powf(table.r(i));
            let rhs = bracket(&d, params, table, which, s.eps);
            Ok(TrajectoryPoint { eps: s.eps, lhs, rhs, ratio: lhs / rhs, refined_ratio: None })
        })
        .collect()
}

/// Ratio of the Nikolskii norm to the data bracket along a continuation
/// sequence. Passes when the ratios stay within a factor 10 of each other
/// and, if a refined sequence is given, agree with it within 25%.
pub fn theorem_ratio(
    sols: &[Solution],
    f: &ScalarField,
    params: &ProblemParams,
    table: &ExponentTable,
    which: Theorem,
    refined: Option<(&[Solution], &ScalarField)>,
) -> Result<CheckResult> {
    which.applicable(table)?;
    if sols.is_empty() {
        return Err(Error::Config("theorem ratio needs at least one solution".into()));
    }
    let mut traj = trajectory(sols, f, params, table, which)?;
    let mut stable = true;
    let mut worst_drift = 0.0f64;
    if let Some((fine, ff)) = refined {
        if fine.len() != sols.len() {
            return Err(Error::Config("refined sequence has a different schedule".into()));
        }
        for (p, q) in traj.iter_mut().zip(trajectory(fine, ff, params, table, which)?) {
            p.refined_ratio = Some(q.ratio);
            if p.ratio > 0.0 {
                let drift = (q.ratio / p.ratio - 1.0).abs();
                worst_drift = worst_drift.max(drift);
                stable &= drift <= 0.25;
            } else {
                stable &= q.ratio == 0.0;
            }
        }
    }
    let max = traj.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let min = traj.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let trivial = traj.iter().all(|p| p.lhs == 0.0);
    let bounded = trivial || (min > 0.0 && max <= 10.0 * min);
    let i = which.index();
    Ok(CheckResult {
        name: which.to_string(),
        lhs: max,
        rhs: 10.0 * min,
        constant: None,
        margin: 10.0 * min - max,
        passed: bounded && stable && traj.iter().all(|p| p.ratio.is_finite()),
        grid: Some(GridMeta::of(f.grid())),
        eps: Some(sols[sols.len() - 1].eps),
        params: Some(*params),
        detail: Some(json!({
            "r": table.r(i),
            "trivial": trivial,
            "max_refinement_drift": worst_drift,
            "trajectory": traj,
        })),
    })
}
