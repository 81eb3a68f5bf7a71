use nalgebra::{DMatrix, DVector};

use super::{
    along_spray, check_dim, max_abs, skew_part, symmetric_part, ConnectionField, MetricField,
    MetricJet, ObataPair, Spray, Tensor11,
};
use crate::calculus::Partials;
use crate::error::Result;
use crate::expr::{Point, ScalarExpression};

/// Lowered form `N_ij = g_ik N^k_j` and its symmetric/skew split.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredConnection {
    pub full: DMatrix<f64>,
    pub symmetric: DMatrix<f64>,
    pub skew: DMatrix<f64>,
}

impl LoweredConnection {
    pub fn new(g: &DMatrix<f64>, n: &DMatrix<f64>) -> Self {
        let full = g * n;
        Self {
            symmetric: symmetric_part(&full),
            skew: skew_part(&full),
            full,
        }
    }
}

/// Nonlinear connection coefficients `N^i_j` at a point, with the lowered
/// decomposition when a metric is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionValue {
    pub point: Point,
    pub coefficients: DMatrix<f64>,
    pub lowered: Option<LoweredConnection>,
}

impl ConnectionValue {
    pub fn new(point: Point, coefficients: DMatrix<f64>) -> Self {
        Self {
            point,
            coefficients,
            lowered: None,
        }
    }

    pub fn with_metric(mut self, g: &DMatrix<f64>) -> Self {
        self.lowered = Some(LoweredConnection::new(g, &self.coefficients));
        self
    }
}

/// `N^i_j = dG^i/dy^j`.
pub fn connection_from_semispray<S: Spray + ?Sized>(
    spray: &S,
    u: &Point,
) -> Result<ConnectionValue> {
    check_dim(spray.dim(), u.dim())?;
    Ok(ConnectionValue::new(u.clone(), spray.y_jacobian(u)?))
}

/// Dynamical covariant derivative of the vertical field `X^i d/dy^i`:
/// components `S(X^i) + X^j N^i_j`.
pub fn nabla_vertical<S: Spray + ?Sized>(
    spray: &S,
    n: &DMatrix<f64>,
    x: &[ScalarExpression],
    u: &Point,
) -> Result<DVector<f64>> {
    let dim = spray.dim();
    check_dim(dim, u.dim())?;
    check_dim(dim, x.len())?;
    check_dim(dim, n.nrows())?;
    let coeffs = spray.coefficients(u)?;
    let mut values = DVector::zeros(dim);
    let mut out = DVector::zeros(dim);
    for (i, xi) in x.iter().enumerate() {
        check_dim(dim, xi.dim())?;
        let jet = Partials::new(xi, 1)?.jet(u, 1)?;
        values[i] = jet.value();
        out[i] = along_spray(jet.grad().expect("order 1"), u, &coeffs);
    }
    out += n * values;
    Ok(out)
}

/// `g_ij| = S(g_ij) - g_im N^m_j - g_mj N^m_i` given `S(g)` and `g`.
pub(crate) fn covariant_metric(
    s_g: &DMatrix<f64>,
    g: &DMatrix<f64>,
    n: &DMatrix<f64>,
) -> DMatrix<f64> {
    let gn = g * n;
    s_g - &gn - gn.transpose()
}

fn spray_data<S: Spray + ?Sized, M: MetricField + ?Sized>(
    spray: &S,
    metric: &M,
    u: &Point,
) -> Result<(MetricJet, DMatrix<f64>)> {
    check_dim(spray.dim(), metric.dim())?;
    check_dim(spray.dim(), u.dim())?;
    let jet = metric.metric_jet(u)?;
    let s_g = jet.along_spray(u.y(), &spray.coefficients(u)?);
    Ok((jet, s_g))
}

/// Dynamical covariant derivative of the metric, `g_ij|`, for the pair
/// `(S, N)`. Vanishes exactly when `N` is metric.
pub fn nabla_metric<S: Spray + ?Sized, M: MetricField + ?Sized>(
    spray: &S,
    n: &DMatrix<f64>,
    metric: &M,
    u: &Point,
) -> Result<DMatrix<f64>> {
    check_dim(spray.dim(), n.nrows())?;
    let (jet, s_g) = spray_data(spray, metric, u)?;
    Ok(covariant_metric(&s_g, &jet.g, n))
}

/// `S(g_ij) - g_im dG^m/dy^j - g_mj dG^m/dy^i`: the metric derivative of the
/// connection induced by the semispray. Zero iff that connection is metric.
pub fn helmholtz_residual<S: Spray + ?Sized, M: MetricField + ?Sized>(
    spray: &S,
    metric: &M,
    u: &Point,
) -> Result<DMatrix<f64>> {
    let (jet, s_g) = spray_data(spray, metric, u)?;
    Ok(covariant_metric(&s_g, &jet.g, &spray.y_jacobian(u)?))
}

fn obata_form(jet: &MetricJet, s_g: &DMatrix<f64>, jac: &DMatrix<f64>) -> DMatrix<f64> {
    // N^i_j = 1/2 g^ik S(g_kj) + O^ik_sj dG^s/dy^k
    let obata = ObataPair::new(&jet.g, &jet.inverse);
    let n = jet.dim();
    let half = &jet.inverse * s_g * 0.5;
    let mut out = half;
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for s in 0..n {
                    acc += obata.o(i, k, s, j) * jac[(s, k)];
                }
            }
            out[(i, j)] += acc;
        }
    }
    out
}

/// The metric nonlinear connection `N^c` of a semispray and a GL-metric:
/// `N^c^i_j = 1/2 g^ik S(g_kj) + O^ik_sj dG^s/dy^k`.
pub fn metric_connection<S: Spray + ?Sized, M: MetricField + ?Sized>(
    spray: &S,
    metric: &M,
    u: &Point,
) -> Result<ConnectionValue> {
    let (jet, s_g) = spray_data(spray, metric, u)?;
    let jac = spray.y_jacobian(u)?;
    Ok(ConnectionValue::new(u.clone(), obata_form(&jet, &s_g, &jac)).with_metric(&jet.g))
}

/// The metric connection computed three ways.
#[derive(Debug, Clone)]
pub struct MetricConnectionForms {
    /// Through the Obata operator.
    pub obata: DMatrix<f64>,
    /// `1/2 g^ik g_kj| + dG^i/dy^j`, with `g_kj|` taken for `(G, dG/dy)`.
    pub covariant: DMatrix<f64>,
    /// `1/2 g^ik S(g_kj) + 1/2 (dG^i/dy^j - g^ik g_mj dG^m/dy^k)`.
    pub lackey: DMatrix<f64>,
}

impl MetricConnectionForms {
    /// Largest pairwise max-norm difference.
    pub fn max_disagreement(&self) -> f64 {
        max_abs(&(&self.obata - &self.covariant))
            .max(max_abs(&(&self.obata - &self.lackey)))
            .max(max_abs(&(&self.covariant - &self.lackey)))
    }
}

pub fn metric_connection_forms<S: Spray + ?Sized, M: MetricField + ?Sized>(
    spray: &S,
    metric: &M,
    u: &Point,
) -> Result<MetricConnectionForms> {
    let (jet, s_g) = spray_data(spray, metric, u)?;
    let jac = spray.y_jacobian(u)?;
    let g_inv = &jet.inverse;

    let obata = obata_form(&jet, &s_g, &jac);
    let covariant = g_inv * covariant_metric(&s_g, &jet.g, &jac) * 0.5 + &jac;

    let n = jet.dim();
    let mut lackey = g_inv * &s_g * 0.5;
    for i in 0..n {
        for j in 0..n {
            let mut contracted = 0.0;
            for k in 0..n {
                for m in 0..n {
                    contracted += g_inv[(i, k)] * jet.g[(m, j)] * jac[(m, k)];
                }
            }
            lackey[(i, j)] += 0.5 * (jac[(i, j)] - contracted);
        }
    }
    Ok(MetricConnectionForms {
        obata,
        covariant,
        lackey,
    })
}

/// Member of the family of metric connections:
/// `N^i_j = N^c^i_j + O^ki_jm X^m_k`.
pub fn family_member<M: MetricField + ?Sized>(
    nc: &ConnectionValue,
    x: &Tensor11,
    metric: &M,
    u: &Point,
) -> Result<ConnectionValue> {
    let dim = metric.dim();
    check_dim(dim, u.dim())?;
    check_dim(dim, nc.coefficients.nrows())?;
    check_dim(dim, x.dim())?;
    let jet = metric.metric_jet(u)?;
    let xm = x.at(u)?;
    let obata = ObataPair::new(&jet.g, &jet.inverse);
    let mut out = nc.coefficients.clone();
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                for m in 0..dim {
                    acc += obata.o(k, i, j, m) * xm[(m, k)];
                }
            }
            out[(i, j)] += acc;
        }
    }
    Ok(ConnectionValue::new(u.clone(), out).with_metric(&jet.g))
}

/// Coefficients of the horizontal semispray `S = y^i delta/delta x^i` of a
/// connection: `G^i = 1/2 N^i_j y^j`.
pub fn horizontal_semispray<C: ConnectionField + ?Sized>(
    conn: &C,
    u: &Point,
) -> Result<DVector<f64>> {
    let n = conn.coefficients(u)?;
    check_dim(u.dim(), n.nrows())?;
    Ok(n * DVector::from_column_slice(u.y()) * 0.5)
}

/// The connection `dG/dy` induced by a semispray, as a field.
#[derive(Debug, Clone, Copy)]
pub struct InducedConnection<'a, S: ?Sized>(pub &'a S);

impl<S: Spray + ?Sized> ConnectionField for InducedConnection<'_, S> {
    fn coefficients(&self, u: &Point) -> Result<DMatrix<f64>> {
        self.0.y_jacobian(u)
    }
}

/// The metric connection `N^c` of `(spray, metric)`, as a field.
#[derive(Debug, Clone, Copy)]
pub struct MetricConnectionField<'a, S: ?Sized, M: ?Sized> {
    pub spray: &'a S,
    pub metric: &'a M,
}

impl<S: Spray + ?Sized, M: MetricField + ?Sized> ConnectionField
    for MetricConnectionField<'_, S, M>
{
    fn coefficients(&self, u: &Point) -> Result<DMatrix<f64>> {
        Ok(metric_connection(self.spray, self.metric, u)?.coefficients)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GLMetricField, SemisprayField};

    fn pt(x: &[f64], y: &[f64]) -> Point {
        Point::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn poincare_spray() -> SemisprayField {
        SemisprayField::parse(&["-y1*y2/x2", "(y1^2 - y2^2)/(2*x2)"]).unwrap()
    }

    #[test]
    fn flat_spray_has_zero_connection() {
        let s = SemisprayField::parse(&["0", "0"]).unwrap();
        let c = connection_from_semispray(&s, &pt(&[1.0, 2.0], &[3.0, 4.0])).unwrap();
        assert_eq!(c.coefficients, DMatrix::zeros(2, 2));
    }

    #[test]
    fn poincare_connection_matches_christoffel_oracle() {
        // Gamma for g = delta / x2^2: G^i = 1/2 Gamma^i_jk y^j y^k, and
        // N^i_j = Gamma^i_jk y^k with Gamma^1_12 = Gamma^1_21 = -1/x2,
        // Gamma^2_11 = 1/x2, Gamma^2_22 = -1/x2.
        let u = pt(&[0.0, 1.0], &[1.0, 0.0]);
        let c = connection_from_semispray(&poincare_spray(), &u).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((c.coefficients - want).amax() < 1e-15);
    }

    #[test]
    fn nabla_vertical_cases() {
        let flat = SemisprayField::parse(&["0", "0"]).unwrap();
        let u = pt(&[0.3, 0.4], &[2.0, -1.0]);
        let consts: Vec<_> = ["1.5", "-2"]
            .iter()
            .map(|t| ScalarExpression::parse(t, 2).unwrap())
            .collect();
        let zero = nabla_vertical(&flat, &DMatrix::zeros(2, 2), &consts, &u).unwrap();
        assert_eq!(zero, DVector::zeros(2));

        // unit vertical field d/dy^2 picks out the column N^j_2
        let n = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let unit: Vec<_> = ["0", "1"]
            .iter()
            .map(|t| ScalarExpression::parse(t, 2).unwrap())
            .collect();
        let col = nabla_vertical(&flat, &n, &unit, &u).unwrap();
        assert_eq!(col, DVector::from_vec(vec![2.0, 4.0]));

        // X = y1, n = 1: S(y1) + y1 c = y1 c
        let s1 = SemisprayField::parse(&["0"]).unwrap();
        let x = [ScalarExpression::parse("y1", 1).unwrap()];
        let v = nabla_vertical(
            &s1,
            &DMatrix::from_element(1, 1, 0.7),
            &x,
            &pt(&[5.0], &[3.0]),
        )
        .unwrap();
        assert!((v[0] - 2.1).abs() < 1e-15);
    }

    #[test]
    fn nabla_metric_cases() {
        let u = pt(&[0.8, -0.3], &[1.1, 0.6]);
        let flat = SemisprayField::parse(&["0", "0"]).unwrap();
        let id = GLMetricField::identity(2);
        assert_eq!(
            nabla_metric(&flat, &DMatrix::zeros(2, 2), &id, &u).unwrap(),
            DMatrix::zeros(2, 2)
        );

        // n = 1, g = e^x1, G = 0, N = y1/2: y1 e^x1 - 2 e^x1 y1/2 = 0
        let g1 = GLMetricField::parse(1, &["exp(x1)"]).unwrap();
        let s1 = SemisprayField::parse(&["0"]).unwrap();
        let u1 = pt(&[0.4], &[1.7]);
        let r = nabla_metric(&s1, &DMatrix::from_element(1, 1, 0.85), &g1, &u1).unwrap();
        assert!(r[(0, 0)].abs() < 1e-15);

        // g = delta, G^1 = x1 y2: g_12| = -x1
        let s = SemisprayField::parse(&["x1*y2", "0"]).unwrap();
        let n = s.y_jacobian(&u).unwrap();
        let r = nabla_metric(&s, &n, &id, &u).unwrap();
        assert_eq!(r[(0, 1)], -0.8);
        assert_eq!(r[(1, 0)], -0.8);
    }

    #[test]
    fn helmholtz_control_case() {
        let s = SemisprayField::parse(&["x1*y2", "0"]).unwrap();
        let id = GLMetricField::identity(2);
        let u = pt(&[1.25, 0.5], &[0.2, -0.7]);
        let r = helmholtz_residual(&s, &id, &u).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.25, -1.25, 0.0]);
        assert_eq!(r, want);
        let flat = SemisprayField::parse(&["0", "0"]).unwrap();
        assert_eq!(
            helmholtz_residual(&flat, &id, &u).unwrap(),
            DMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn metric_connection_one_dimensional() {
        // g = e^x1, G = 0: N^c = 1/2 e^-x1 (y1 e^x1) = y1/2
        let g = GLMetricField::parse(1, &["exp(x1)"]).unwrap();
        let s = SemisprayField::parse(&["0"]).unwrap();
        let u = pt(&[0.9], &[2.0]);
        let nc = metric_connection(&s, &g, &u).unwrap();
        assert!((nc.coefficients[(0, 0)] - 1.0).abs() < 1e-15);
        let flat = metric_connection(
            &SemisprayField::parse(&["0", "0"]).unwrap(),
            &GLMetricField::identity(2),
            &pt(&[0.0, 0.0], &[1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(flat.coefficients, DMatrix::zeros(2, 2));
    }

    #[test]
    fn metric_connection_is_metric_and_forms_agree() {
        let g = GLMetricField::parse(2, &["2 + x1*y2", "0.1*y1", "1.5 + sin(x2)*0.2"]).unwrap();
        let s = SemisprayField::parse(&["x1*y2 + y1^2", "0.3*x2*y1*y2 - y2"]).unwrap();
        let u = pt(&[0.4, -0.7], &[0.9, 0.3]);
        let nc = metric_connection(&s, &g, &u).unwrap();
        let r = nabla_metric(&s, &nc.coefficients, &g, &u).unwrap();
        assert!(r.amax() < 1e-12, "{r}");
        let forms = metric_connection_forms(&s, &g, &u).unwrap();
        assert!(forms.max_disagreement() < 1e-13);
        // Nc differs from dG/dy here because the Helmholtz residual is nonzero.
        let jac = s.y_jacobian(&u).unwrap();
        assert!((nc.coefficients - jac).amax() > 1e-3);
    }

    #[test]
    fn family_member_flat_plane() {
        let id = GLMetricField::identity(2);
        let u = pt(&[0.0, 0.0], &[1.0, 0.0]);
        let nc = ConnectionValue::new(u.clone(), DMatrix::zeros(2, 2));
        let x = Tensor11::Constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let m = family_member(&nc, &x, &id, &u).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]);
        assert_eq!(m.coefficients, want);
        let zero = family_member(&nc, &Tensor11::zero(2), &id, &u).unwrap();
        assert_eq!(zero.coefficients, nc.coefficients);
    }

    #[test]
    fn family_member_one_dimensional_is_trivial() {
        let g = GLMetricField::parse(1, &["exp(x1)"]).unwrap();
        let s = SemisprayField::parse(&["x1*y1^2"]).unwrap();
        let u = pt(&[0.2], &[-1.3]);
        let nc = metric_connection(&s, &g, &u).unwrap();
        let m = family_member(
            &nc,
            &Tensor11::Constant(DMatrix::from_element(1, 1, 42.0)),
            &g,
            &u,
        )
        .unwrap();
        assert!((m.coefficients - nc.coefficients).amax() < 1e-13);
    }

    #[test]
    fn horizontal_semispray_cases() {
        let u = pt(&[0.0, 1.0], &[1.0, 0.0]);
        let zero = |_: &Point| Ok(DMatrix::<f64>::zeros(2, 2));
        assert_eq!(horizontal_semispray(&zero, &u).unwrap(), DVector::zeros(2));

        let n1 = |p: &Point| Ok(DMatrix::from_element(1, 1, p.y()[0]));
        let g = horizontal_semispray(&n1, &pt(&[0.0], &[3.0])).unwrap();
        assert_eq!(g[0], 4.5);

        // The Riemannian spray is 2-homogeneous, so it is its own horizontal spray.
        let spray = poincare_spray();
        let g = horizontal_semispray(&InducedConnection(&spray), &u).unwrap();
        assert!((g - DVector::from_vec(vec![0.0, 0.5])).amax() < 1e-15);
    }
}
