//! Scalar expressions in the chart coordinates `(x1..xn, y1..yn)` of a
//! tangent bundle.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;            (* right-associative *)
//! atom    = number | var | func "(" expr ")" | "(" expr ")" ;
//! var     = ("x" | "y") digit { digit } ;   (* 1-based index <= dim *)
//! func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "tanh" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ```
//!
//! Integer exponents are evaluated for any base; non-integer exponents
//! require a positive base at evaluation time.

mod diff;
mod parse;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, EvalError, EvalErrorKind, Result};

pub use parse::parse;

/// One of the `2n` chart coordinates. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    X(usize),
    Y(usize),
}

impl Coord {
    /// Position of this coordinate in the packed `(x, y)` layout of length `2n`.
    pub fn slot(self, dim: usize) -> usize {
        match self {
            Coord::X(i) => i,
            Coord::Y(i) => dim + i,
        }
    }

    pub fn from_slot(slot: usize, dim: usize) -> Self {
        if slot < dim {
            Coord::X(slot)
        } else {
            Coord::Y(slot - dim)
        }
    }

    pub fn index(self) -> usize {
        match self {
            Coord::X(i) | Coord::Y(i) => i,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::X(i) => write!(f, "x{}", i + 1),
            Coord::Y(i) => write!(f, "y{}", i + 1),
        }
    }
}

/// A point `u = (x, y)` of the tangent bundle in an induced chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidArgument(
                "point must have dimension >= 1".into(),
            ));
        }
        Ok(Self { x, y })
    }

    /// Builds a point from `2n` packed coordinates, base first.
    pub fn from_slots(slots: &[f64]) -> Result<Self> {
        if slots.is_empty() || !slots.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "expected an even, non-zero number of coordinates, got {}",
                slots.len()
            )));
        }
        let n = slots.len() / 2;
        Self::new(slots[..n].to_vec(), slots[n..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn get(&self, c: Coord) -> f64 {
        match c {
            Coord::X(i) => self.x[i],
            Coord::Y(i) => self.y[i],
        }
    }

    pub fn slots(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// Copy of this point with coordinate `c` shifted by `delta`.
    pub fn shifted(&self, c: Coord, delta: f64) -> Self {
        let mut p = self.clone();
        match c {
            Coord::X(i) => p.x[i] += delta,
            Coord::Y(i) => p.y[i] += delta,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> std::result::Result<f64, EvalErrorKind> {
        match self {
            Func::Sin => Ok(v.sin()),
            Func::Cos => Ok(v.cos()),
            Func::Exp => Ok(v.exp()),
            Func::Tanh => Ok(v.tanh()),
            Func::Log if v <= 0.0 => Err(EvalErrorKind::LogDomain),
            Func::Log => Ok(v.ln()),
            Func::Sqrt if v < 0.0 => Err(EvalErrorKind::SqrtDomain),
            Func::Sqrt => Ok(v.sqrt()),
        }
    }
}

/// Expression tree node. Children are reference counted so derivative trees
/// can share subtrees with the expression they came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Coord),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

fn pow_value(base: f64, exp: f64) -> std::result::Result<f64, EvalErrorKind> {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        if base == 0.0 && exp < 0.0 {
            return Err(EvalErrorKind::DivisionByZero);
        }
        Ok(base.powi(exp as i32))
    } else if base > 0.0 {
        Ok(base.powf(exp))
    } else {
        Err(EvalErrorKind::PowDomain)
    }
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(v: f64) -> Arc<Expr> {
        Arc::new(Expr::Num(v))
    }

    pub fn var(c: Coord) -> Arc<Expr> {
        Arc::new(Expr::Var(c))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn is_num(&self, v: f64) -> bool {
        self.as_num() == Some(v)
    }

    /// True if no variable occurs in the subtree.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Largest variable index (zero-based) referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(c) => Some(c.index()),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_index(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_index().max(b.max_index()),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn eval(&self, u: &Point) -> std::result::Result<f64, EvalError> {
        let fail = |kind| EvalError {
            kind,
            subexpr: truncated(self.to_string()),
        };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(c) => u.get(*c),
            Expr::Neg(a) => -a.eval(u)?,
            Expr::Add(a, b) => a.eval(u)? + b.eval(u)?,
            Expr::Sub(a, b) => a.eval(u)? - b.eval(u)?,
            Expr::Mul(a, b) => a.eval(u)? * b.eval(u)?,
            Expr::Div(a, b) => {
                let num = a.eval(u)?;
                let den = b.eval(u)?;
                if den == 0.0 {
                    return Err(fail(EvalErrorKind::DivisionByZero));
                }
                num / den
            }
            Expr::Pow(a, b) => pow_value(a.eval(u)?, b.eval(u)?).map_err(fail)?,
            Expr::Call(func, a) => func.apply(a.eval(u)?).map_err(fail)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(EvalErrorKind::NonFinite))
        }
    }

    // Simplifying constructors. These fold constants and drop identity
    // elements; they never reorder or canonicalise.

    pub fn neg(a: Arc<Expr>) -> Arc<Expr> {
        match &*a {
            Expr::Num(v) => Expr::num(-v),
            Expr::Neg(inner) => inner.clone(),
            _ => Arc::new(Expr::Neg(a)),
        }
    }

    pub fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        if a.is_num(0.0) {
            return b;
        }
        if b.is_num(0.0) {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Expr::num(x + y);
        }
        Arc::new(Expr::Add(a, b))
    }

    pub fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        if b.is_num(0.0) {
            return a;
        }
        if a.is_num(0.0) {
            return Expr::neg(b);
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Expr::num(x - y);
        }
        Arc::new(Expr::Sub(a, b))
    }

    pub fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        if a.is_num(0.0) || b.is_num(0.0) {
            return Expr::num(0.0);
        }
        if a.is_num(1.0) {
            return b;
        }
        if b.is_num(1.0) {
            return a;
        }
        if a.is_num(-1.0) {
            return Expr::neg(b);
        }
        if b.is_num(-1.0) {
            return Expr::neg(a);
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Expr::num(x * y);
        }
        Arc::new(Expr::Mul(a, b))
    }

    pub fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        if a.is_num(0.0) {
            return Expr::num(0.0);
        }
        if b.is_num(1.0) {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if y != 0.0 {
                return Expr::num(x / y);
            }
        }
        Arc::new(Expr::Div(a, b))
    }

    pub fn pow(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        if b.is_num(0.0) {
            return Expr::num(1.0);
        }
        if b.is_num(1.0) {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if let Ok(v) = pow_value(x, y) {
                if v.is_finite() {
                    return Expr::num(v);
                }
            }
        }
        Arc::new(Expr::Pow(a, b))
    }

    pub fn call(func: Func, a: Arc<Expr>) -> Arc<Expr> {
        if let Some(x) = a.as_num() {
            if let Ok(v) = func.apply(x) {
                if v.is_finite() {
                    return Expr::num(v);
                }
            }
        }
        Arc::new(Expr::Call(func, a))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            // negative literals print as "(-c)", which is atomic
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "(-{})", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(c) => write!(f, "{c}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, 1),
            Expr::Sub(a, b) => binary(f, a, " - ", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
            Expr::Pow(a, b) => {
                a.fmt_at(f, 5)?;
                f.write_str("^")?;
                b.fmt_at(f, 3)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, prec: u8) -> fmt::Result {
    a.fmt_at(f, prec)?;
    f.write_str(op)?;
    b.fmt_at(f, prec + 1)
}

fn truncated(mut s: String) -> String {
    const LIMIT: usize = 120;
    if s.len() > LIMIT {
        let mut cut = LIMIT;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push_str("...");
    }
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// A parsed scalar field on the `2n`-dimensional chart of `TM`.
///
/// Immutable once built; clones share the underlying tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpression {
    root: Arc<Expr>,
    dim: usize,
}

impl ScalarExpression {
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        parse(text, dim)
    }

    /// Wraps an existing tree. Fails if the tree references an index `>= dim`.
    pub fn from_expr(root: Arc<Expr>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if let Some(i) = root.max_index() {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
        }
        Ok(Self { root, dim })
    }

    pub fn constant(v: f64, dim: usize) -> Self {
        Self {
            root: Expr::num(v),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Arc<Expr> {
        &self.root
    }

    pub fn evaluate(&self, u: &Point) -> Result<f64> {
        self.check_point(u)?;
        Ok(self.root.eval(u)?)
    }

    /// Exact partial derivative with respect to `var`.
    pub fn differentiate(&self, var: Coord) -> Self {
        assert!(var.index() < self.dim, "coordinate {var} out of range");
        Self {
            root: diff::derivative(&self.root, var),
            dim: self.dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.root.is_num(0.0)
    }

    pub(crate) fn check_point(&self, u: &Point) -> Result<()> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for ScalarExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
