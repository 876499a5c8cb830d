//! The built-in expression catalog used for data and manufactured fields.
//!
//! Expressions are ordinary arithmetic over the coordinates `x`, `y` and the
//! distance `r` from the domain centre, with `+ - * / ^`, parentheses, the
//! constant `pi`, and the functions `sin cos sinpi cospi exp sqrt abs tanh`.
//! A function binds to the next atom, so `sinpi x * sinpi y` reads as
//! `sin(pi x) * sin(pi y)`. The prefix `const` is accepted for readability:
//! `const 2`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    SinPi,
    CosPi,
    Exp,
    Sqrt,
    Abs,
    Tanh,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    R,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, y: f64, r: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Y => y,
            Node::R => r,
            Node::Neg(a) => -a.eval(x, y, r),
            Node::Add(a, b) => a.eval(x, y, r) + b.eval(x, y, r),
            Node::Sub(a, b) => a.eval(x, y, r) - b.eval(x, y, r),
            Node::Mul(a, b) => a.eval(x, y, r) * b.eval(x, y, r),
            Node::Div(a, b) => a.eval(x, y, r) / b.eval(x, y, r),
            Node::Pow(a, b) => {
                let base = a.eval(x, y, r);
                match **b {
                    Node::Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(x, y, r)),
                }
            }
            Node::Call(f, a) => {
                let v = a.eval(x, y, r);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::SinPi => (PI * v).sin(),
                    Func::CosPi => (PI * v).cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                    Func::Tanh => v.tanh(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::UnknownExpression(src.to_string()))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::UnknownExpression(format!("{src}: unexpected '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::UnknownExpression(format!("{}: {what}", self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat_op('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                if !self.eat_op(')') {
                    return Err(self.err("missing ')'"));
                }
                Ok(inner)
            }
            Tok::Op(c) => Err(self.err(&format!("unexpected '{c}'"))),
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "x" => return Ok(Node::X),
                    "y" => return Ok(Node::Y),
                    "r" => return Ok(Node::R),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "const" => return self.unary(),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "sinpi" => Func::SinPi,
                    "cospi" => Func::CosPi,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    "tanh" => Func::Tanh,
                    other => return Err(self.err(&format!("unknown name '{other}'"))),
                };
                let arg = self.atom()?;
                Ok(Node::Call(func, Box::new(arg)))
            }
        }
    }
}

/// A parsed catalog expression. Keeps its source text for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(Error::UnknownExpression("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0, src };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(Expr { source: src.trim().to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate at coordinates `(x, y)` with radial coordinate `r`.
    pub fn eval(&self, x: f64, y: f64, r: f64) -> f64 {
        self.root.eval(x, y, r)
    }

    /// Evaluate a one-dimensional expression at `x` (`y = 0`, `r = |x - 1/2|`).
    pub fn eval_1d(&self, x: f64) -> f64 {
        self.root.eval(x, 0.0, (x - 0.5).abs())
    }

    /// `c * self`, keeping a readable source.
    pub fn scaled(&self, c: f64) -> Self {
        Expr {
            source: format!("{c}*({})", self.source),
            root: Node::Mul(Box::new(Node::Num(c)), Box::new(self.root.clone())),
        }
    }

    /// A random smooth member of the catalog: a short linear combination of
    /// sine products and polynomial bumps on the unit interval or square.
    pub fn random_catalog<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let terms = rng.gen_range(1..=3);
        let mut parts = Vec::with_capacity(terms);
        for _ in 0..terms {
            let c: f64 = rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let c = (c * 1000.0).round() / 1000.0;
            let kind = rng.gen_range(0..3);
            let k = rng.gen_range(1..=3);
            let l = rng.gen_range(1..=3);
            let t = match (dim, kind) {
                (1, 0) => format!("{c}*sinpi({k}*x)"),
                (1, 1) => format!("{c}*x*(1-x)*(1+{k}*x)"),
                (1, _) => format!("{c}*sinpi x*cospi({}*x)", k - 1),
                (_, 0) => format!("{c}*sinpi({k}*x)*sinpi({l}*y)"),
                (_, 1) => format!("{c}*x*(1-x)*y*(1-y)*(1+{k}*x*y)"),
                (_, _) => format!("{c}*sinpi x*sinpi y*cospi({}*(x-y))", k - 1),
            };
            parts.push(t);
        }
        Expr::parse(&parts.join(" + ")).expect("catalog terms parse")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// Pointwise evaluation at every active node (zero on exterior nodes).
pub fn eval_expr(expr: &Expr, grid: &Arc<Grid>) -> ScalarField {
    let c = grid.center();
    ScalarField::from_fn(grid.clone(), |k| {
        if !grid.is_active(k) {
            return 0.0;
        }
        let [x, y] = grid.coords(k);
        let r = if grid.dim() == 1 { (x - c[0]).abs() } else { (x - c[0]).hypot(y - c[1]) };
        expr.eval(x, y, r)
    })
}
