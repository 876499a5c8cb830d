use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{derive_exponents, ExponentTable, ProblemParams};
use crate::field::{DomainKind, Expr, Grid};
use crate::solver::SolveConfig;
use crate::verify::Theorem;

pub const CHECK_NAMES: [&str; 12] =
    ["lemp4", "lemp5", "leme1", "leme2", "leme3", "prope1", "prope2", "lemb3", "T1", "T2", "T3a", "T3b"];

fn default_domain() -> DomainKind {
    DomainKind::Interval
}
fn default_extent() -> Vec<f64> {
    vec![1.0]
}
fn default_n() -> usize {
    129
}
fn default_sigma() -> f64 {
    0.75
}
fn default_eps_min() -> f64 {
    1e-6
}
fn default_newton_tol() -> f64 {
    1e-8
}
fn default_max_newton() -> usize {
    60
}
fn default_linear_tol() -> f64 {
    1e-8
}
fn default_max_linear() -> usize {
    20_000
}
fn default_t_values() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}
fn default_identity_eps() -> f64 {
    0.5
}
fn default_catalog() -> usize {
    4
}
fn default_samples() -> usize {
    100_000
}
fn default_true() -> bool {
    true
}

/// A run description, read from flat TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_domain")]
    pub domain: DomainKind,
    /// `[L]` for an interval, `[Lx, Ly]` for a rectangle, `[R]` for a disc.
    #[serde(default = "default_extent")]
    pub extent: Vec<f64>,
    /// Nodes per axis.
    #[serde(default = "default_n")]
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub s: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Right-hand side as an expression in `x`, `y`, `r`.
    pub f: String,
    /// Last entry of the geometric schedule `1, 1/2, ...`.
    #[serde(default = "default_eps_min")]
    pub eps_min: f64,
    /// Explicit schedule; overrides `eps_min`.
    #[serde(default)]
    pub eps_schedule: Option<Vec<f64>>,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton_iters: usize,
    #[serde(default = "default_linear_tol")]
    pub linear_tol: f64,
    #[serde(default = "default_max_linear")]
    pub max_linear_iters: usize,
    #[serde(default)]
    pub checks: Vec<String>,
    /// Exponents `t` for the identity checks.
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    /// Regularization used for checks on catalog fields.
    #[serde(default = "default_identity_eps")]
    pub identity_eps: f64,
    /// Number of random catalog fields for the identity checks.
    #[serde(default = "default_catalog")]
    pub catalog_count: usize,
    #[serde(default = "default_samples")]
    pub lemp4_samples: usize,
    /// Also solve on the grid with `2n-1` nodes per axis for theorem ratios.
    #[serde(default = "default_true")]
    pub refine: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub sweep_n: Vec<usize>,
    #[serde(default)]
    pub sweep_f_scale: Vec<f64>,
    #[serde(default)]
    pub sweep_eps_min: Vec<f64>,
    #[serde(default)]
    pub sweep_s: Vec<f64>,
    #[serde(default)]
    pub sweep_p: Vec<f64>,
    #[serde(default)]
    pub sweep_q: Vec<f64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> Vec<f64> {
        match &self.eps_schedule {
            Some(s) => s.clone(),
            None => SolveConfig::geometric_schedule(self.eps_min),
        }
    }

    pub fn params(&self) -> ProblemParams {
        let eps = self.schedule().last().copied().unwrap_or(self.eps_min);
        ProblemParams { p: self.p, q: self.q, alpha: self.alpha, beta: self.beta, s: self.s, sigma: self.sigma, eps }
    }

    pub fn table(&self) -> Result<ExponentTable> {
        derive_exponents(&self.params())
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            eps_schedule: self.schedule(),
            newton_tol: self.newton_tol,
            max_newton_iters: self.max_newton_iters,
            linear_tol: self.linear_tol,
            max_linear_iters: self.max_linear_iters,
            ..SolveConfig::default()
        }
    }

    pub fn expr(&self) -> Result<Expr> {
        Expr::parse(&self.f)
    }

    pub fn grid_with(&self, n: usize) -> Result<Arc<Grid>> {
        let need = |k: usize| {
            if self.extent.len() != k {
                Err(Error::Config(format!("domain {:?} takes {k} extent value(s)", self.domain)))
            } else {
                Ok(())
            }
        };
        let g = match self.domain {
            DomainKind::Interval => {
                need(1)?;
                Grid::interval(self.extent[0], n)?
            }
            DomainKind::Rectangle => {
                need(2)?;
                Grid::rectangle(self.extent[0], self.extent[1], n, n)?
            }
            DomainKind::Disc => {
                need(1)?;
                Grid::disc(self.extent[0], n)?
            }
        };
        g.require_stencil_width()?;
        Ok(Arc::new(g))
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        self.grid_with(self.n)
    }

    pub fn theorems(&self) -> Vec<Theorem> {
        self.checks.iter().filter_map(|c| c.parse().ok()).collect()
    }

    pub fn has_check(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c == name)
    }

    pub fn is_sweep(&self) -> bool {
        !(self.sweep_n.is_empty()
            && self.sweep_f_scale.is_empty()
            && self.sweep_eps_min.is_empty()
            && self.sweep_s.is_empty()
            && self.sweep_p.is_empty()
            && self.sweep_q.is_empty())
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        self.solve_config().validate()?;
        self.expr()?;
        self.grid()?;
        for c in &self.checks {
            if !CHECK_NAMES.contains(&c.as_str()) {
                return Err(Error::Config(format!("unknown check {c:?}; known: {}", CHECK_NAMES.join(", "))));
            }
            if self.beta == 0.0 && matches!(c.as_str(), "prope2" | "T2" | "T3a" | "T3b") {
                return Err(Error::Config(format!("check {c} requires beta > 0 (config has beta = 0)")));
            }
        }
        if !(self.identity_eps > 0.0 && self.identity_eps <= 1.0) {
            return Err(Error::Config(format!("identity_eps = {} is outside (0,1]", self.identity_eps)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "p = 3.0\nq = 4.0\nalpha = 1.0\nbeta = 1.0\ns = 2.0\nf = \"const 2\"\n";

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.n, 129);
        assert_eq!(c.schedule().last(), Some(&1e-6));
        assert!(!c.is_sweep());
    }

    #[test]
    fn rejects_bad_input() {
        let e = RunConfig::parse(&BASE.replace("q = 4.0", "q = 2.5")).unwrap_err();
        assert!(e.to_string().contains("(H3)"), "{e}");
        let e = RunConfig::parse(&format!("{}checks = [\"T2\"]\n", BASE.replace("beta = 1.0", "beta = 0.0")))
            .unwrap_err();
        assert!(e.to_string().contains("beta > 0"), "{e}");
        assert!(RunConfig::parse(&format!("{BASE}bogus = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}checks = [\"nope\"]\n")).is_err());
    }
}
