//! Reference solution of the one-dimensional problem on (0,1).
//!
//! With `F(x) = int_0^x f`, any solution satisfies `g(u') = c - F` for the
//! scalar law `g`, so `u' = g^{-1}(c - F)` and `c` is fixed by `u(1) = 0`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{DomainKind, Expr, Grid, ScalarField};
use crate::operator::FluxLaw;

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and its difference from the embedded Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 || (b - a) < 1e-15 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// Solve `g(t) = y` for the odd increasing law `g`.
pub fn invert_monotone_g(y: f64, law: &FluxLaw) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    if !y.is_finite() {
        return Err(Error::NonFiniteField(format!("cannot invert g at {y}")));
    }
    let target = y.abs();
    let mut hi = 1.0 + target.powf(1.0 / (law.p - 1.0)) / law.alpha.max(1.0);
    let mut widen = 0;
    while law.scalar(hi) < target {
        hi *= 2.0;
        widen += 1;
        if widen > 2000 || !hi.is_finite() {
            return Err(Error::RootBracketFailure { lo: 0.0, hi });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if law.scalar(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if (law.scalar(hi) - target).abs() < (target - law.scalar(lo)).abs() { hi } else { lo };
    Ok(t.copysign(y))
}

const PANELS: usize = 64;
const QUAD_TOL: f64 = 1e-14;

/// Exact solution on (0,1) for a load given as an expression in `x`.
#[derive(Debug, Clone)]
pub struct Oracle1d {
    f: Expr,
    law: FluxLaw,
    prefix: Vec<f64>,
    c: f64,
}

impl Oracle1d {
    pub fn new(f: &Expr, law: FluxLaw) -> Result<Self> {
        if !(law.alpha > 0.0 && law.beta >= 0.0 && law.p > 1.0 && law.q >= law.p && law.eps >= 0.0) {
            return Err(Error::Config(format!("flux law out of range: {law:?}")));
        }
        let fx = |x: f64| f.eval_1d(x);
        let mut prefix = vec![0.0; PANELS + 1];
        for k in 0..PANELS {
            let a = k as f64 / PANELS as f64;
            let b = (k + 1) as f64 / PANELS as f64;
            prefix[k + 1] = prefix[k] + adaptive(&fx, a, b, 1e-16, 30);
        }
        let mut oracle = Oracle1d { f: f.clone(), law, prefix, c: 0.0 };
        oracle.c = oracle.find_c()?;
        Ok(oracle)
    }

    /// `F(x) = int_0^x f`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = ((x * PANELS as f64).floor() as usize).min(PANELS - 1);
        let a = k as f64 / PANELS as f64;
        if x == a {
            return self.prefix[k];
        }
        self.prefix[k] + adaptive(&|t: f64| self.f.eval_1d(t), a, x, 1e-16, 30)
    }

    fn slope_for(&self, c: f64, x: f64) -> f64 {
        invert_monotone_g(c - self.antiderivative(x), &self.law).unwrap_or(f64::NAN)
    }

    fn mean_slope(&self, c: f64) -> f64 {
        adaptive(&|x| self.slope_for(c, x), 0.0, 1.0, QUAD_TOL, 40)
    }

    fn find_c(&self) -> Result<f64> {
        let m = (0..=1024)
            .map(|k| self.antiderivative(k as f64 / 1024.0).abs())
            .fold(0.0, f64::max);
        if m == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (-m, m);
        let (flo, fhi) = (self.mean_slope(lo), self.mean_slope(hi));
        if !(flo <= 0.0 && fhi >= 0.0) {
            return Err(Error::RootBracketFailure { lo, hi });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.mean_slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The constant `c` in `g(u') = c - F`.
    pub fn flux_constant(&self) -> f64 {
        self.c
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.slope_for(self.c, x)
    }

    pub fn value(&self, x: f64) -> f64 {
        adaptive(&|t| self.derivative(t), 0.0, x.clamp(0.0, 1.0), QUAD_TOL, 40)
    }

    /// Nodal values on an interval grid of unit length, accumulated cell by cell.
    pub fn sample(&self, grid: &Arc<Grid>) -> Result<ScalarField> {
        if grid.kind() != DomainKind::Interval || (grid.extents()[0] - 1.0).abs() > 1e-14 {
            return Err(Error::Config("the 1D oracle lives on the unit interval".into()));
        }
        let n = grid.len();
        let mut vals = vec![0.0; n];
        for k in 1..n {
            let a = grid.coords(k - 1)[0];
            let b = grid.coords(k)[0];
            vals[k] = vals[k - 1] + adaptive(&|t| self.derivative(t), a, b, QUAD_TOL / n as f64, 40);
        }
        vals[n - 1] = 0.0;
        Ok(ScalarField::new(grid.clone(), vals))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(alpha: f64, beta: f64, p: f64, q: f64, eps: f64) -> FluxLaw {
        FluxLaw { alpha, beta, p, q, eps }
    }

    #[test]
    fn inversion_examples() {
        let l = law(1.0, 0.0, 3.0, 3.0, 0.0);
        assert!((invert_monotone_g(4.0, &l).unwrap() - 2.0).abs() < 1e-14);
        assert!((invert_monotone_g(-4.0, &l).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(invert_monotone_g(0.0, &l).unwrap(), 0.0);
        let l = law(1.0, 1.0, 3.0, 4.0, 0.0);
        assert!((invert_monotone_g(2.0, &l).unwrap() - 1.0).abs() < 1e-14);
        let l = law(1e-6, 1.0, 3.0, 5.0, 1e-3);
        for y in [1e-9, 1e-3, 1.0, 1e5] {
            let t = invert_monotone_g(y, &l).unwrap();
            assert!((l.scalar(t) - y).abs() <= 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn p3_closed_form() {
        let f = Expr::parse("const 2").unwrap();
        let o = Oracle1d::new(&f, law(1.0, 0.0, 3.0, 3.0, 0.0)).unwrap();
        assert!(o.flux_constant().abs() < 1e-12 || (o.flux_constant() - 1.0).abs() < 1e-12);
        let exact = |x: f64| {
            let y = if x <= 0.5 { x } else { 1.0 - x };
            (1.0 - (1.0 - 2.0 * y).powf(1.5)) / 3.0
        };
        for x in [0.1, 0.25, 0.5, 0.8] {
            assert!((o.value(x) - exact(x)).abs() < 1e-10, "{x}: {} {}", o.value(x), exact(x));
        }
    }

    #[test]
    fn pq_slope_at_the_wall() {
        let f = Expr::parse("const 2").unwrap();
        let o = Oracle1d::new(&f, law(1.0, 1.0, 3.0, 4.0, 0.0)).unwrap();
        // c - F(0) = 1 by symmetry, so t^2 + t^3 = 1
        let t = o.derivative(0.0);
        assert!((t * t + t * t * t - 1.0).abs() < 1e-10);
        assert!((t - 0.754_877_666_246_693).abs() < 1e-9);
        let g = Arc::new(Grid::interval(1.0, 65).unwrap());
        let s = o.sample(&g).unwrap();
        assert!((s[32] - o.value(0.5)).abs() < 1e-11);
        assert!(s[0] == 0.0 && s[64] == 0.0);
    }

    #[test]
    fn zero_load() {
        let f = Expr::parse("0").unwrap();
        let o = Oracle1d::new(&f, law(1.0, 1.0, 3.0, 4.0, 0.0)).unwrap();
        assert_eq!(o.value(0.3), 0.0);
    }
}
