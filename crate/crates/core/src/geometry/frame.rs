use nalgebra::DMatrix;

use super::{check_dim, max_abs, MetricField};
use crate::error::Result;
use crate::expr::Point;

/// The Berwald frame `{delta/delta x^i, d/dy^i}` of a connection, written in
/// the natural frame `{d/dx^i, d/dy^i}` of `TM`, with the horizontal and
/// vertical projectors and the tangent structure.
///
/// Vectors are columns with `x` components first.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    /// Columns are the Berwald frame vectors: `[[I, 0], [-N, I]]`.
    pub frame: DMatrix<f64>,
    /// `[[I, 0], [N, I]]`; its rows are the cobasis `{dx^i, delta y^i}`.
    pub inverse: DMatrix<f64>,
    pub horizontal: DMatrix<f64>,
    pub vertical: DMatrix<f64>,
    /// `J = d/dy^i (x) dx^i`
    pub tangent: DMatrix<f64>,
}

impl AdaptedFrame {
    pub fn new(n: &DMatrix<f64>) -> Self {
        let dim = n.nrows();
        let id = DMatrix::<f64>::identity(dim, dim);
        let block = |a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(2 * dim, 2 * dim);
            m.view_mut((0, 0), (dim, dim)).copy_from(a);
            m.view_mut((0, dim), (dim, dim)).copy_from(b);
            m.view_mut((dim, 0), (dim, dim)).copy_from(c);
            m.view_mut((dim, dim), (dim, dim)).copy_from(d);
            m
        };
        let zero = DMatrix::zeros(dim, dim);
        Self {
            frame: block(&id, &zero, &-n, &id),
            inverse: block(&id, &zero, n, &id),
            horizontal: block(&id, &zero, &-n, &zero),
            vertical: block(&zero, &zero, n, &id),
            tangent: block(&zero, &zero, &id, &zero),
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows() / 2
    }

    /// Max deviation from `h + v = 1`, `h^2 = h`, `v^2 = v`, `hv = vh = 0`,
    /// `J^2 = 0` and from the frame and cobasis being inverse.
    pub fn projector_defect(&self) -> f64 {
        let (h, v, j) = (&self.horizontal, &self.vertical, &self.tangent);
        let id = DMatrix::<f64>::identity(h.nrows(), h.ncols());
        [
            max_abs(&(h + v - &id)),
            max_abs(&(h * h - h)),
            max_abs(&(v * v - v)),
            max_abs(&(h * v)),
            max_abs(&(v * h)),
            max_abs(&(j * j)),
            max_abs(&(&self.frame * &self.inverse - &id)),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Numerical rank of `J h`; `n` for any connection.
    pub fn tangent_horizontal_rank(&self) -> usize {
        (&self.tangent * &self.horizontal).rank(1e-12)
    }
}

/// The almost complex structure `F = delta/delta x^i (x) delta y^i - d/dy^i (x) dx^i`
/// and the Sasaki-type metric `G = g dx (x) dx + g delta y (x) delta y`,
/// both in the natural frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostHermitian {
    pub frame: AdaptedFrame,
    pub complex: DMatrix<f64>,
    pub metric: DMatrix<f64>,
}

impl AlmostHermitian {
    /// `max |F^2 + 1|`.
    pub fn complex_defect(&self) -> f64 {
        let id = DMatrix::<f64>::identity(self.complex.nrows(), self.complex.ncols());
        max_abs(&(&self.complex * &self.complex + id))
    }

    /// `max |G(FX, FY) - G(X, Y)|` over frame vectors.
    pub fn isometry_defect(&self) -> f64 {
        let f = &self.complex;
        max_abs(&(f.transpose() * &self.metric * f - &self.metric))
    }

    /// `max |omega(e_a, e_b) - G(F e_a, e_b)|` for the natural-frame matrix
    /// `omega` of a 2-form.
    pub fn hermitian_defect(&self, omega: &DMatrix<f64>) -> f64 {
        max_abs(&(omega - self.complex.transpose() * &self.metric))
    }
}

pub fn almost_hermitian<M: MetricField + ?Sized>(
    metric: &M,
    n: &DMatrix<f64>,
    u: &Point,
) -> Result<AlmostHermitian> {
    let dim = metric.dim();
    check_dim(dim, u.dim())?;
    check_dim(dim, n.nrows())?;
    let g = metric.metric_jet(u)?.g;
    let frame = AdaptedFrame::new(n);

    let mut f_berwald = DMatrix::zeros(2 * dim, 2 * dim);
    let mut g_berwald = DMatrix::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        f_berwald[(i, dim + i)] = 1.0;
        f_berwald[(dim + i, i)] = -1.0;
    }
    g_berwald.view_mut((0, 0), (dim, dim)).copy_from(&g);
    g_berwald.view_mut((dim, dim), (dim, dim)).copy_from(&g);

    let complex = &frame.frame * f_berwald * &frame.inverse;
    let metric = frame.inverse.transpose() * g_berwald * &frame.inverse;
    Ok(AlmostHermitian {
        frame,
        complex,
        metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cartan_form, unique_connection, GLMetricField, LagrangeSpace};

    fn pt(x: &[f64], y: &[f64]) -> Point {
        Point::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn flat_structure_is_standard() {
        let g = GLMetricField::identity(2);
        let ah =
            almost_hermitian(&g, &DMatrix::zeros(2, 2), &pt(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, -1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(ah.complex, want);
        assert_eq!(ah.metric, DMatrix::identity(4, 4));
        assert_eq!(ah.complex_defect(), 0.0);
    }

    #[test]
    fn arbitrary_connection_gives_complex_structure() {
        let g = GLMetricField::parse(3, &["2", "0.1*x1", "0", "1 + y2^2", "0.3", "4"]).unwrap();
        let n = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 3.1, 0.0, -0.7, 2.2, 1.4, -5.0]);
        let ah = almost_hermitian(&g, &n, &pt(&[0.2, 0.1, 0.3], &[1.0, 2.0, 3.0])).unwrap();
        assert!(ah.complex_defect() < 1e-12);
        assert!(ah.isometry_defect() < 1e-12);
        assert!((&ah.metric - ah.metric.transpose()).amax() < 1e-12);
        let b = &ah.frame.frame;
        let gm_b = b.transpose() * &ah.metric * b;
        assert!(gm_b.view((0, 3), (3, 3)).amax() < 1e-12);
    }

    #[test]
    fn projectors() {
        let n = DMatrix::from_row_slice(2, 2, &[0.4, -1.3, 2.0, 0.7]);
        let frame = AdaptedFrame::new(&n);
        assert!(frame.projector_defect() < 1e-12);
        assert_eq!(frame.tangent_horizontal_rank(), 2);
    }

    #[test]
    fn poincare_is_almost_hermitian_under_unique_connection() {
        let l = LagrangeSpace::parse("(y1^2 + y2^2)/(x2^2)", 2).unwrap();
        let u = pt(&[0.3, 0.8], &[-1.1, 0.4]);
        let nc = unique_connection(&l, &u).unwrap();
        let ah = almost_hermitian(&l, &nc.coefficients, &u).unwrap();
        let omega = cartan_form(&l, &u).unwrap();
        assert!(ah.hermitian_defect(&omega) < 1e-12);
        let ah0 = almost_hermitian(&l, &DMatrix::zeros(2, 2), &u).unwrap();
        assert!(ah0.hermitian_defect(&omega) > 1e-3);
    }
}
