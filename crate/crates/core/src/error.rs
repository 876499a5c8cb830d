use thiserror::Error;

/// One failed hypothesis on the problem parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Name of the hypothesis (`H2`, `H3`, or `eps`).
    pub hypothesis: &'static str,
    pub field: &'static str,
    pub condition: &'static str,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}) {}: requires {}", self.hypothesis, self.field, self.condition)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("hypothesis violation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    HypothesisViolation(Vec<Violation>),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("non-finite field value: {0}")]
    NonFiniteField(String),

    #[error("unknown expression: {0}")]
    UnknownExpression(String),

    #[error("boundary violation: |u| = {value:e} at boundary node {node}")]
    BoundaryViolation { node: usize, value: f64 },

    #[error("no convergence after {iters} Newton iterations (residual {residual:e}, eps {eps:e})")]
    NoConvergence { iters: usize, residual: f64, eps: f64 },

    #[error("line search stalled at eps {eps:e} (step below 1e-12, residual {residual:e})")]
    LineSearchStall { eps: f64, residual: f64 },

    #[error("root bracket not found in [{lo}, {hi}]")]
    RootBracketFailure { lo: f64, hi: f64 },

    #[error("empty shift set: {0}")]
    EmptyShiftSet(String),

    #[error("fractional order {0} out of range (0,1)")]
    OrderOutOfRange(f64),

    #[error("not a solution: residual {residual:e} exceeds tolerance {tol:e}")]
    NotASolution { residual: f64, tol: f64 },

    #[error("inapplicable theorem {which}: {reason}")]
    InapplicableTheorem { which: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid solve configuration: {0}")]
    SolveConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
