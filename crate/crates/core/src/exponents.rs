//! Hypotheses on the problem data and the derived exponent calculus.
//!
//! All derived exponents are computed in exact rational arithmetic from the
//! (dyadic) binary values of the inputs and rounded once to `f64`, so two
//! runs on the same inputs agree bit for bit and threshold flags are decided
//! without rounding noise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// The tuple `(p, q, alpha, beta, s, sigma, eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Integrability exponent of the datum.
    pub s: f64,
    /// Fractional smoothness order of the datum.
    pub sigma: f64,
    pub eps: f64,
}

impl ProblemParams {
    /// Same parameters with a different regularization.
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(self) -> Result<Self> {
        validate(self)
    }
}

/// Convert a finite `f64` into the exact rational it represents.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

fn round(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Check (H2), (H3) and the range of `eps`. All violations are reported together.
pub fn validate(params: ProblemParams) -> Result<ProblemParams> {
    let mut bad = Vec::new();
    let ProblemParams { p, q, alpha, beta, s, sigma, eps } = params;
    let all_finite = [p, q, alpha, beta, s, sigma, eps].iter().all(|v| v.is_finite());
    if !all_finite {
        bad.push(Violation { hypothesis: "input", field: "params", condition: "finite values" });
        return Err(Error::HypothesisViolation(bad));
    }
    if !(p > 2.0) {
        bad.push(Violation { hypothesis: "H3", field: "p", condition: "p>2" });
    }
    if !(q >= p) {
        bad.push(Violation { hypothesis: "H3", field: "q", condition: "q>=p" });
    }
    if !(alpha > 0.0) {
        bad.push(Violation { hypothesis: "H3", field: "alpha", condition: "alpha>0" });
    }
    if !(beta >= 0.0) {
        bad.push(Violation { hypothesis: "H3", field: "beta", condition: "beta>=0" });
    }
    if !(s >= 2.0) {
        bad.push(Violation { hypothesis: "H2", field: "s", condition: "s>=2" });
    }
    // sigma > 1/s  <=>  sigma * s > 1 for s > 0, decided exactly.
    if !(s > 0.0 && exact(sigma) * exact(s) > BigRational::one()) {
        bad.push(Violation { hypothesis: "H2", field: "sigma", condition: "sigma>1/s" });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        bad.push(Violation { hypothesis: "eps", field: "eps", condition: "eps in (0,1]" });
    }
    if bad.is_empty() {
        Ok(params)
    } else {
        Err(Error::HypothesisViolation(bad))
    }
}

/// Regularity exponents, test exponents and theorem applicability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub tau: f64,
    pub rho: f64,
    pub thm1: bool,
    pub thm2: bool,
    pub thm3a: bool,
    pub thm3b: bool,
}

impl ExponentTable {
    /// `r_i` for `i` in 1..=4.
    pub fn r(&self, i: usize) -> f64 {
        match i {
            1 => self.r1,
            2 => self.r2,
            3 => self.r3,
            4 => self.r4,
            _ => panic!("exponent index {i} out of 1..=4"),
        }
    }

    /// `t_i` for `i` in 1..=4.
    pub fn t(&self, i: usize) -> f64 {
        match i {
            1 => self.t1,
            2 => self.t2,
            3 => self.t3,
            4 => self.t4,
            _ => panic!("exponent index {i} out of 1..=4"),
        }
    }
}

/// Derive the exponent table. Parameters are validated first.
pub fn derive_exponents(params: &ProblemParams) -> Result<ExponentTable> {
    let params = validate(*params)?;
    let p = exact(params.p);
    let q = exact(params.q);
    let s = exact(params.s);
    let two = BigRational::from_integer(BigInt::from(2));
    let four = BigRational::from_integer(BigInt::from(4));
    let one = BigRational::one();

    let r1 = &s * (&p - &two) + &two;
    let r2 = &s * (&q - &two) + &two;
    let r3 = &r1 + &q - &p;
    let r4 = &r2 + &p - &q;
    let t1 = &r1 - &p;
    let t2 = &r2 - &q;
    let t3 = &r3 - &q;
    let t4 = &r4 - &p;
    let tau = (&s * (&p - &two) + &q - &p) / (&q - &two);
    let rho = (&s * (&q - &two) + &p - &q) / (&p - &two);

    let beta_pos = params.beta > 0.0;
    let thm3a = beta_pos && s >= (&q + &p - &four) / (&p - &two);
    let gap = &one + &p - &q;
    let thm3b = beta_pos
        && p < q
        && q < &p + &one
        && gap > BigRational::zero()
        && s >= &one + &one / &gap;

    Ok(ExponentTable {
        r1: round(&r1),
        r2: round(&r2),
        r3: round(&r3),
        r4: round(&r4),
        t1: round(&t1),
        t2: round(&t2),
        t3: round(&t3),
        t4: round(&t4),
        tau: round(&tau),
        rho: round(&rho),
        thm1: true,
        thm2: beta_pos,
        thm3a,
        thm3b,
    })
}
