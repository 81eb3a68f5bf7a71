use std::sync::Arc;

use super::{Coord, Expr, Func};

fn constant_value(e: &Expr) -> Option<f64> {
    if !e.is_constant() {
        return None;
    }
    match e {
        Expr::Num(v) => Some(*v),
        Expr::Neg(a) => constant_value(a).map(|v| -v),
        Expr::Add(a, b) => Some(constant_value(a)? + constant_value(b)?),
        Expr::Sub(a, b) => Some(constant_value(a)? - constant_value(b)?),
        Expr::Mul(a, b) => Some(constant_value(a)? * constant_value(b)?),
        Expr::Div(a, b) => Some(constant_value(a)? / constant_value(b)?),
        _ => None,
    }
    .filter(|v| v.is_finite())
}

pub(super) fn derivative(e: &Arc<Expr>, var: Coord) -> Arc<Expr> {
    match &**e {
        Expr::Num(_) => Expr::num(0.0),
        Expr::Var(c) => Expr::num(if *c == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(derivative(a, var)),
        Expr::Add(a, b) => Expr::add(derivative(a, var), derivative(b, var)),
        Expr::Sub(a, b) => Expr::sub(derivative(a, var), derivative(b, var)),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul(derivative(a, var), b.clone()),
            Expr::mul(a.clone(), derivative(b, var)),
        ),
        Expr::Div(a, b) => {
            // (a/b)' = a'/b - a*b'/b^2
            let da = derivative(a, var);
            let db = derivative(b, var);
            Expr::sub(
                Expr::div(da, b.clone()),
                Expr::div(
                    Expr::mul(a.clone(), db),
                    Expr::pow(b.clone(), Expr::num(2.0)),
                ),
            )
        }
        Expr::Pow(a, b) => {
            let da = derivative(a, var);
            if let Some(c) = constant_value(b) {
                // c * a^(c-1) * a'
                return Expr::mul(
                    Expr::mul(Expr::num(c), Expr::pow(a.clone(), Expr::num(c - 1.0))),
                    da,
                );
            }
            // a^b * (b' log a + b a'/a)
            let db = derivative(b, var);
            Expr::mul(
                e.clone(),
                Expr::add(
                    Expr::mul(db, Expr::call(Func::Log, a.clone())),
                    Expr::div(Expr::mul(b.clone(), da), a.clone()),
                ),
            )
        }
        Expr::Call(func, a) => {
            let da = derivative(a, var);
            if da.as_num() == Some(0.0) {
                return Expr::num(0.0);
            }
            let outer = match func {
                Func::Sin => Expr::call(Func::Cos, a.clone()),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, a.clone())),
                Func::Exp => e.clone(),
                Func::Log => return Expr::div(da, a.clone()),
                Func::Sqrt => {
                    return Expr::div(da, Expr::mul(Expr::num(2.0), e.clone()));
                }
                Func::Tanh => Expr::sub(Expr::num(1.0), Expr::pow(e.clone(), Expr::num(2.0))),
            };
            Expr::mul(outer, da)
        }
    }
}
