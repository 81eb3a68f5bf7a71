//! Random field generators and the finite-difference oracle, for tests.
//!
//! Generated metrics are positive definite on the cube `[-1, 1]^2n` and
//! generated Lagrangians are regular there.

use nalgebra::DMatrix;
use rand::Rng;

use crate::expr::{Point, ScalarExpression};
use crate::geometry::{GLMetricField, LagrangeSpace, SemisprayField};

pub use crate::calculus::finite_difference_partial;

fn var<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> String {
    let i = rng.random_range(1..=dim);
    if rng.random_bool(0.5) {
        format!("x{i}")
    } else {
        format!("y{i}")
    }
}

fn coeff<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> String {
    format!("({:.6})", rng.random_range(-scale..=scale))
}

/// Sum of `terms` monomials of degree at most 2 with coefficients in
/// `[-scale, scale]`.
pub fn random_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    terms: usize,
    scale: f64,
) -> String {
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let monomial = match rng.random_range(0..3) {
            0 => String::from("1"),
            1 => var(rng, dim),
            _ => format!("{}*{}", var(rng, dim), var(rng, dim)),
        };
        parts.push(format!("{}*{monomial}", coeff(rng, scale)));
    }
    parts.join(" + ")
}

/// `g_ii = 2 + p_ii`, `g_ij = q_ij` with `|p| <= 0.3` and `|q| <= 0.15` on the
/// unit cube, hence diagonally dominant.
pub fn random_metric<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> GLMetricField {
    let mut upper = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            upper.push(if i == j {
                format!("2 + {}", random_polynomial(rng, dim, 3, 0.1))
            } else {
                random_polynomial(rng, dim, 3, 0.05)
            });
        }
    }
    GLMetricField::parse(dim, &upper).expect("generated metric parses")
}

/// `G^i` polynomial of degree at most 2 with coefficients in `[-1, 1]`.
pub fn random_spray<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> SemisprayField {
    let coefficients: Vec<String> = (0..dim)
        .map(|_| random_polynomial(rng, dim, 4, 1.0))
        .collect();
    SemisprayField::parse(&coefficients).expect("generated spray parses")
}

fn smooth<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> String {
    let i = rng.random_range(1..=dim);
    let a = rng.random_range(-1.5..=1.5);
    let b = rng.random_range(-1.0..=1.0);
    let f = ["sin", "cos", "tanh"][rng.random_range(0..3)];
    format!("{}*{f}(({a:.6})*x{i} + ({b:.6}))", coeff(rng, scale))
}

/// `L = a_ij(x) y^i y^j + b_i(x) y^i + c(x)` with smooth coefficients and
/// `a` diagonally dominant, so `g = a` is regular.
pub fn random_lagrangian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> LagrangeSpace {
    let mut terms = Vec::new();
    for i in 1..=dim {
        for j in i..=dim {
            let a = if i == j {
                format!("(2 + {})", smooth(rng, dim, 0.3))
            } else {
                format!("(2*{})", smooth(rng, dim, 0.1))
            };
            terms.push(format!("{a}*y{i}*y{j}"));
        }
        terms.push(format!("{}*y{i}", smooth(rng, dim, 1.0)));
    }
    terms.push(smooth(rng, dim, 1.0));
    LagrangeSpace::parse(&terms.join(" + "), dim).expect("generated Lagrangian parses")
}

/// Constant `(1,1)` tensor with entries in `[-1, 1]`.
pub fn random_tensor<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..=1.0))
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Point {
    let slots: Vec<f64> = (0..2 * dim)
        .map(|_| rng.random_range(-radius..=radius))
        .collect();
    Point::from_slots(&slots).expect("even slot count")
}

fn random_text<R: Rng + ?Sized>(rng: &mut R, dim: usize, depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.7) {
            var(rng, dim)
        } else {
            format!("{:.3}", rng.random_range(0.5..=2.0))
        };
    }
    let a = random_text(rng, dim, depth - 1);
    match rng.random_range(0..11) {
        0 => format!("({a} + {})", random_text(rng, dim, depth - 1)),
        1 => format!("({a} - {})", random_text(rng, dim, depth - 1)),
        2 => format!("({a} * {})", random_text(rng, dim, depth - 1)),
        3 => format!("({a} / (2 + cos({})))", random_text(rng, dim, depth - 1)),
        4 => format!("sin({a})"),
        5 => format!("cos({a})"),
        6 => format!("exp(tanh({a}))"),
        7 => format!("log(2 + sin({a}))"),
        8 => format!("sqrt(1.5 + cos({a}))"),
        9 => format!("({a})^{}", rng.random_range(2..=3)),
        _ => format!("-{a}"),
    }
}

/// Random expression that is smooth and finite everywhere: divisions,
/// logarithms and roots only see arguments bounded away from zero.
pub fn random_expression<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    depth: usize,
) -> ScalarExpression {
    ScalarExpression::parse(&random_text(rng, dim, depth), dim)
        .expect("generated expression parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_produce_regular_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in 1..=3 {
            for _ in 0..20 {
                let u = random_point(&mut rng, dim, 1.0);
                assert!(random_metric(&mut rng, dim).metric_jet(&u).is_ok());
                assert!(random_lagrangian(&mut rng, dim).metric_jet(&u).is_ok());
                assert!(random_expression(&mut rng, dim, 4).evaluate(&u).is_ok());
            }
        }
    }
}
