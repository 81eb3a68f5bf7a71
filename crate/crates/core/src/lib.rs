//! Metric nonlinear connections for systems of second-order ODEs.
//!
//! A semispray `S = y^i d/dx^i - 2 G^i d/dy^i` on a tangent bundle, together
//! with a generalized Lagrange metric `g_ij(x, y)`, determines a metric
//! nonlinear connection and a whole family of them. For a Lagrange space the
//! canonic connection is the only one compatible with both the metric and the
//! Cartan symplectic form. This crate builds all of these from closed-form
//! expressions and checks the identities pointwise.
//!
//! ```
//! use semispray::expr::Point;
//! use semispray::geometry::{unique_connection, LagrangeSpace};
//!
//! let poincare = LagrangeSpace::parse("(y1^2 + y2^2)/(x2^2)", 2).unwrap();
//! let u = Point::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
//! let n = unique_connection(&poincare, &u).unwrap().coefficients;
//! assert!((n[(0, 1)] + 1.0).abs() < 1e-12);
//! assert!((n[(1, 0)] - 1.0).abs() < 1e-12);
//! ```

pub mod calculus;
pub mod error;
pub mod expr;
pub mod flows;
pub mod geometry;
pub mod sampling;
#[cfg(feature = "testing")]
pub mod testing;

pub use error::{Error, Result};
pub use expr::{Coord, Point, ScalarExpression};
