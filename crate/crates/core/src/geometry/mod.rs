//! Pointwise constructions on the tangent bundle: semisprays, nonlinear
//! connections, generalized Lagrange metrics, Obata projectors, Lagrange
//! spaces and the almost Hermitian structure they induce.
//!
//! Every operation is a pure function of the field definitions and a
//! [`Point`]. Matrices use the convention `m[(i, j)]` for the component with
//! upper index `i` and lower index `j` (so `N[(i, j)] = N^i_j`), and
//! `g[(i, j)] = g_ij` for covariant tensors.

mod connection;
mod fields;
mod frame;
mod lagrange;
mod obata;

use nalgebra::{DMatrix, DVector};

use crate::calculus::Partials;
use crate::error::{Error, Result};
use crate::expr::{Point, ScalarExpression};

pub use connection::{
    connection_from_semispray, family_member, helmholtz_residual, horizontal_semispray,
    metric_connection, metric_connection_forms, nabla_metric, nabla_vertical, ConnectionValue,
    InducedConnection, LoweredConnection, MetricConnectionField, MetricConnectionForms,
};
pub use fields::{GLMetricField, SemisprayField, Tensor11};
pub use frame::{almost_hermitian, AdaptedFrame, AlmostHermitian};
pub use lagrange::{
    canonic_semispray, cartan_form, energy, lagrange_family_member, lagrange_metric,
    symplectic_adapted, unique_connection, CanonicSpray, LagrangeSpace, SymplecticBlocks,
};
pub use obata::ObataPair;

/// Below this `|det g|` a metric is treated as singular.
pub const SINGULARITY_TOLERANCE: f64 = 1e-10;

/// A system of SODE `x'' + 2 G(x, x') = 0`, given by the local coefficients
/// `G^i` of its semispray.
pub trait Spray: Sync {
    fn dim(&self) -> usize;

    /// `G^i(u)`.
    fn coefficients(&self, u: &Point) -> Result<DVector<f64>>;

    /// `dG^i/dy^j (u)`, the induced nonlinear connection.
    fn y_jacobian(&self, u: &Point) -> Result<DMatrix<f64>>;
}

/// A symmetric `(2,0)` d-tensor `g_ij(x, y)` of rank `n`.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;

    /// Value, inverse and first partials at `u`. Fails with a singular-metric
    /// error (or a degenerate-Lagrangian error for Lagrange spaces) when
    /// `|det g(u)| <= SINGULARITY_TOLERANCE`.
    fn metric_jet(&self, u: &Point) -> Result<MetricJet>;
}

/// Nonlinear connection coefficients `N^i_j` as a function of the point.
pub trait ConnectionField: Sync {
    fn coefficients(&self, u: &Point) -> Result<DMatrix<f64>>;
}

impl<F> ConnectionField for F
where
    F: Fn(&Point) -> Result<DMatrix<f64>> + Sync,
{
    fn coefficients(&self, u: &Point) -> Result<DMatrix<f64>> {
        self(u)
    }
}

/// A metric tensor and its first partials at one point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub det: f64,
    /// `dx[k] = dg/dx^k`
    pub dx: Vec<DMatrix<f64>>,
    /// `dy[k] = dg/dy^k`
    pub dy: Vec<DMatrix<f64>>,
}

impl MetricJet {
    pub(crate) fn new(
        g: DMatrix<f64>,
        dx: Vec<DMatrix<f64>>,
        dy: Vec<DMatrix<f64>>,
        singular: fn(f64) -> Error,
    ) -> Result<Self> {
        let (inverse, det) = invert(&g).map_err(singular)?;
        Ok(Self {
            g,
            inverse,
            det,
            dx,
            dy,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `S(g_ij) = y^k dg_ij/dx^k - 2 G^k dg_ij/dy^k` for the semispray with
    /// coefficients `spray` at the point with fiber coordinates `y`.
    pub fn along_spray(&self, y: &[f64], spray: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for k in 0..n {
            out += &self.dx[k] * y[k] - &self.dy[k] * (2.0 * spray[k]);
        }
        out
    }
}

/// LU inverse with partial pivoting. Returns `Err(det)` when
/// `|det| <= SINGULARITY_TOLERANCE`.
pub(crate) fn invert(m: &DMatrix<f64>) -> std::result::Result<(DMatrix<f64>, f64), f64> {
    let lu = m.clone().lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() <= SINGULARITY_TOLERANCE {
        return Err(det.abs());
    }
    lu.try_inverse().map(|inv| (inv, det)).ok_or(det.abs())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `S(f)(u) = y^i df/dx^i - 2 G^i df/dy^i`.
pub fn apply_semispray<S: Spray + ?Sized>(
    spray: &S,
    f: &ScalarExpression,
    u: &Point,
) -> Result<f64> {
    check_dim(spray.dim(), f.dim())?;
    check_dim(spray.dim(), u.dim())?;
    let partials = Partials::new(f, 1)?;
    let jet = partials.jet(u, 1)?;
    let coeffs = spray.coefficients(u)?;
    Ok(along_spray(jet.grad().expect("order 1"), u, &coeffs))
}

/// `S(f)` from a packed gradient `(df/dx, df/dy)`.
pub(crate) fn along_spray(grad: &[f64], u: &Point, coeffs: &DVector<f64>) -> f64 {
    let n = u.dim();
    (0..n)
        .map(|i| u.y()[i] * grad[i] - 2.0 * coeffs[i] * grad[n + i])
        .sum()
}

/// Max-norm of a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub(crate) fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn skew_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64], y: &[f64]) -> Point {
        Point::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn semispray_on_base_coordinate_gives_velocity() {
        let flat = SemisprayField::parse(&["0", "0"]).unwrap();
        let f = ScalarExpression::parse("x1", 2).unwrap();
        assert_eq!(
            apply_semispray(&flat, &f, &pt(&[0.0, 0.0], &[3.0, 4.0])).unwrap(),
            3.0
        );
        let f = ScalarExpression::parse("y1", 2).unwrap();
        assert_eq!(
            apply_semispray(&flat, &f, &pt(&[0.5, 2.0], &[3.0, 4.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn semispray_drift_on_fiber_coordinate() {
        // S(y1) = -2 G^1 = -2 x1 y2
        let spray = SemisprayField::parse(&["x1*y2", "0"]).unwrap();
        let f = ScalarExpression::parse("y1", 2).unwrap();
        let u = pt(&[2.0, 0.0], &[1.0, 5.0]);
        assert_eq!(apply_semispray(&spray, &f, &u).unwrap(), -20.0);
    }

    #[test]
    fn semispray_matches_derivative_along_integral_curve() {
        // d/dt f(x(t), x'(t)) = S(f) along a solution. One-sided second-order
        // difference over two small RK4 steps.
        use crate::flows::integrate_sode;
        let spray = SemisprayField::parse(&["x1*y2", "0.3*y1^2"]).unwrap();
        let f = ScalarExpression::parse("x1*y1 + sin(y2)", 2).unwrap();
        let u = pt(&[2.0, 0.5], &[1.0, 5.0]);
        let h = 1e-4;
        let traj = integrate_sode(&spray, &u, h, 2).unwrap();
        let v: Vec<f64> = traj
            .samples()
            .iter()
            .map(|(_, p)| f.evaluate(p).unwrap())
            .collect();
        let fd = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        let s = apply_semispray(&spray, &f, &u).unwrap();
        assert!((fd - s).abs() < 1e-5 * s.abs().max(1.0), "{fd} vs {s}");
    }

    #[test]
    fn invert_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(invert(&m).is_err());
        let (inv, det) = invert(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0])).unwrap();
        assert_eq!(det, 8.0);
        assert_eq!(inv[(1, 1)], 0.25);
    }
}
