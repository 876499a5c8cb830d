use std::collections::BTreeMap;

use serde::Serialize;

use crate::exponents::ExponentTable;
use crate::solver::Solution;
use crate::verify::CheckResult;

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTelemetry {
    pub n: usize,
    pub eps: f64,
    pub newton_iters: usize,
    pub linear_iters: usize,
    pub residual_norm: f64,
    pub energy: f64,
}

impl StageTelemetry {
    pub fn of(n: usize, s: &Solution) -> Self {
        StageTelemetry {
            n,
            eps: s.eps,
            newton_iters: s.newton_iters,
            linear_iters: s.linear_iters,
            residual_norm: s.residual_norm,
            energy: s.energy,
        }
    }
}

/// Everything a `verify` run produced, with the config needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub tool: ToolInfo,
    pub constants_sha256: String,
    pub config: RunConfig,
    pub exponents: ExponentTable,
    pub norms: BTreeMap<String, f64>,
    pub checks: Vec<CheckResult>,
    pub telemetry: Vec<StageTelemetry>,
    pub all_passed: bool,
}

/// Column order of the sweep table.
pub const SWEEP_COLUMNS: [&str; 21] = [
    "n",
    "eps_min",
    "f_scale",
    "p",
    "q",
    "s",
    "status",
    "newton_iters",
    "residual",
    "oracle_error",
    "eoc",
    "w1_norm",
    "nikolskii_r1",
    "ratio_T1",
    "bounded_T1",
    "ratio_T2",
    "bounded_T2",
    "ratio_T3a",
    "bounded_T3a",
    "ratio_T3b",
    "bounded_T3b",
];
