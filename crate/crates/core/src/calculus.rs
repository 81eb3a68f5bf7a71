//! Jets (value plus partials up to order 3) of scalar fields at a point.
//!
//! [`Partials`] differentiates an expression symbolically once, for every
//! sorted multi-index up to the requested order, and can then be evaluated at
//! any number of points. Slots follow the packed layout of [`Coord::slot`]:
//! `x1..xn` occupy `0..n` and `y1..yn` occupy `n..2n`.

use crate::error::{Error, Result};
use crate::expr::{Coord, Point, ScalarExpression};

/// Highest derivative order supported.
pub const MAX_ORDER: usize = 3;

/// Value and partial derivatives of a scalar field at a fixed point.
///
/// Slots above `order` are absent. Hessian and third-order tensors are stored
/// densely in row-major order over `2n` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    order: usize,
    value: f64,
    grad: Option<Vec<f64>>,
    hess: Option<Vec<f64>>,
    third: Option<Vec<f64>>,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn hess(&self) -> Option<&[f64]> {
        self.hess.as_deref()
    }

    pub fn third(&self) -> Option<&[f64]> {
        self.third.as_deref()
    }

    fn width(&self) -> usize {
        2 * self.dim
    }

    /// First partial by slot. Panics if the jet has order 0.
    pub fn d1(&self, a: usize) -> f64 {
        self.grad.as_ref().expect("jet order < 1")[a]
    }

    pub fn d2(&self, a: usize, b: usize) -> f64 {
        let w = self.width();
        self.hess.as_ref().expect("jet order < 2")[a * w + b]
    }

    pub fn d3(&self, a: usize, b: usize, c: usize) -> f64 {
        let w = self.width();
        self.third.as_ref().expect("jet order < 3")[(a * w + b) * w + c]
    }

    /// First partial by coordinate.
    pub fn partial(&self, c: Coord) -> f64 {
        self.d1(c.slot(self.dim))
    }

    pub fn partial2(&self, a: Coord, b: Coord) -> f64 {
        self.d2(a.slot(self.dim), b.slot(self.dim))
    }

    pub fn partial3(&self, a: Coord, b: Coord, c: Coord) -> f64 {
        self.d3(a.slot(self.dim), b.slot(self.dim), c.slot(self.dim))
    }

    /// Largest relative deviation from index symmetry across the Hessian and
    /// third-order tensors, normalised by `max(1, |entry|)`.
    pub fn symmetry_defect(&self) -> f64 {
        let w = self.width();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        let mut worst: f64 = 0.0;
        if self.hess.is_some() {
            for a in 0..w {
                for b in 0..w {
                    worst = worst.max(rel(self.d2(a, b), self.d2(b, a)));
                }
            }
        }
        if self.third.is_some() {
            for a in 0..w {
                for b in 0..w {
                    for c in 0..w {
                        let v = self.d3(a, b, c);
                        for p in [
                            self.d3(a, c, b),
                            self.d3(b, a, c),
                            self.d3(b, c, a),
                            self.d3(c, a, b),
                            self.d3(c, b, a),
                        ] {
                            worst = worst.max(rel(v, p));
                        }
                    }
                }
            }
        }
        worst
    }

    /// Component-wise sum of two jets at the same point.
    pub fn sum(&self, other: &Jet) -> Result<Jet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let add = |a: &Option<Vec<f64>>, b: &Option<Vec<f64>>| match (a, b) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(p, q)| p + q).collect()),
            _ => None,
        };
        Ok(Jet {
            dim: self.dim,
            order: self.order.min(other.order),
            value: self.value + other.value,
            grad: add(&self.grad, &other.grad),
            hess: add(&self.hess, &other.hess),
            third: add(&self.third, &other.third),
        })
    }
}

fn partial_name(slots: &[usize], dim: usize) -> String {
    let mut s = format!("d^{}/", slots.len());
    for &a in slots {
        s.push_str(&format!("d{}", Coord::from_slot(a, dim)));
    }
    s
}

/// Symbolic partial derivatives of one expression, up to a fixed order.
#[derive(Debug, Clone)]
pub struct Partials {
    expr: ScalarExpression,
    order: usize,
    first: Vec<ScalarExpression>,
    // sorted pairs a <= b, keyed by `pair_index`
    second: Vec<ScalarExpression>,
    // sorted triples a <= b <= c, keyed by `triple_index`
    third: Vec<ScalarExpression>,
}

fn pair_index(a: usize, b: usize, w: usize) -> usize {
    a * w + b
}

fn triple_index(a: usize, b: usize, c: usize, w: usize) -> usize {
    (a * w + b) * w + c
}

impl Partials {
    pub fn new(expr: &ScalarExpression, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "jet order {order} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        let dim = expr.dim();
        let w = 2 * dim;
        let zero = ScalarExpression::constant(0.0, dim);
        let coord = |a| Coord::from_slot(a, dim);

        let first: Vec<_> = if order >= 1 {
            (0..w).map(|a| expr.differentiate(coord(a))).collect()
        } else {
            Vec::new()
        };
        let mut second = Vec::new();
        if order >= 2 {
            second = vec![zero.clone(); w * w];
            for a in 0..w {
                for b in a..w {
                    second[pair_index(a, b, w)] = first[a].differentiate(coord(b));
                }
            }
        }
        let mut third = Vec::new();
        if order >= 3 {
            third = vec![zero; w * w * w];
            for a in 0..w {
                for b in a..w {
                    let ab = &second[pair_index(a, b, w)];
                    for c in b..w {
                        third[triple_index(a, b, c, w)] = ab.differentiate(coord(c));
                    }
                }
            }
        }
        Ok(Self {
            expr: expr.clone(),
            order,
            first,
            second,
            third,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.expr.dim()
    }

    pub fn expression(&self) -> &ScalarExpression {
        &self.expr
    }

    /// Symbolic first partial by slot.
    pub fn first(&self, a: usize) -> &ScalarExpression {
        &self.first[a]
    }

    /// Evaluates all partials up to `order` (at most the order this table
    /// was built with).
    pub fn jet(&self, u: &Point, order: usize) -> Result<Jet> {
        if order > self.order {
            return Err(Error::InvalidArgument(format!(
                "requested jet order {order} but partials were built to order {}",
                self.order
            )));
        }
        self.expr.check_point(u)?;
        let dim = self.dim();
        let w = 2 * dim;
        let eval = |e: &ScalarExpression, slots: &[usize]| {
            e.root().eval(u).map_err(|source| {
                if slots.is_empty() {
                    Error::Eval(source)
                } else {
                    Error::Partial {
                        partial: partial_name(slots, dim),
                        source,
                    }
                }
            })
        };

        let value = eval(&self.expr, &[])?;
        let grad = if order >= 1 {
            let g = (0..w)
                .map(|a| eval(&self.first[a], &[a]))
                .collect::<Result<Vec<_>>>()?;
            Some(g)
        } else {
            None
        };
        let hess = if order >= 2 {
            let mut h = vec![0.0; w * w];
            for a in 0..w {
                for b in a..w {
                    let v = eval(&self.second[pair_index(a, b, w)], &[a, b])?;
                    h[a * w + b] = v;
                    h[b * w + a] = v;
                }
            }
            Some(h)
        } else {
            None
        };
        let third = if order >= 3 {
            let mut t = vec![0.0; w * w * w];
            for a in 0..w {
                for b in a..w {
                    for c in b..w {
                        let v = eval(&self.third[triple_index(a, b, c, w)], &[a, b, c])?;
                        for (i, j, k) in [
                            (a, b, c),
                            (a, c, b),
                            (b, a, c),
                            (b, c, a),
                            (c, a, b),
                            (c, b, a),
                        ] {
                            t[triple_index(i, j, k, w)] = v;
                        }
                    }
                }
            }
            Some(t)
        } else {
            None
        };
        Ok(Jet {
            dim,
            order,
            value,
            grad,
            hess,
            third,
        })
    }
}

/// Jet of `e` at `u` up to `order` (at most 3).
pub fn jet(e: &ScalarExpression, u: &Point, order: usize) -> Result<Jet> {
    Partials::new(e, order)?.jet(u, order)
}

/// Central finite-difference estimate of a partial of order 0, 1 or 2.
///
/// Truncation error is `O(h^2)`; roundoff grows like `eps / h^order`.
/// Only the test surface uses this: it is the independent oracle for the
/// symbolic engine.
#[cfg(any(test, feature = "testing"))]
pub fn finite_difference_partial(
    e: &ScalarExpression,
    u: &Point,
    index: &[Coord],
    h: f64,
) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument("step h must be positive".into()));
    }
    let f = |p: &Point| e.evaluate(p);
    match *index {
        [] => f(u),
        [a] => Ok((f(&u.shifted(a, h))? - f(&u.shifted(a, -h))?) / (2.0 * h)),
        [a, b] if a == b => {
            Ok((f(&u.shifted(a, h))? - 2.0 * f(u)? + f(&u.shifted(a, -h))?) / (h * h))
        }
        [a, b] => {
            let pp = f(&u.shifted(a, h).shifted(b, h))?;
            let pm = f(&u.shifted(a, h).shifted(b, -h))?;
            let mp = f(&u.shifted(a, -h).shifted(b, h))?;
            let mm = f(&u.shifted(a, -h).shifted(b, -h))?;
            Ok((pp - pm - mp + mm) / (4.0 * h * h))
        }
        _ => Err(Error::InvalidArgument(
            "finite differences support multi-indices up to order 2".into(),
        )),
    }
}
