use nalgebra::{DMatrix, DVector};

use super::{
    check_dim, family_member, invert, skew_part, ConnectionValue, MetricField, MetricJet, Spray,
    Tensor11,
};
use crate::calculus::{Jet, Partials};
use crate::error::{Error, Result};
use crate::expr::{Coord, Point, ScalarExpression};

/// A Lagrange space given by a regular Lagrangian `L(x, y)`.
///
/// Everything else (metric, canonic semispray, canonic connection, energy,
/// Cartan form) is derived on demand from the order-3 jet of `L`.
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    lagrangian: Partials,
}

/// Pointwise derived data shared by the Lagrange constructions.
struct Local {
    jet: Jet,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    det: f64,
    /// `M_kh = d2L/dy^k dx^h`
    mixed: DMatrix<f64>,
}

impl Local {
    /// `A_kh = d2L/dy^k dx^h - d2L/dx^k dy^h`
    fn skew_mixed(&self) -> DMatrix<f64> {
        &self.mixed - self.mixed.transpose()
    }

    /// `b_k = M_kh y^h - dL/dx^k`, so that `G = 1/4 g^-1 b`.
    fn spray_source(&self, y: &[f64]) -> DVector<f64> {
        let n = self.g.nrows();
        let lx = DVector::from_fn(n, |k, _| self.jet.partial(Coord::X(k)));
        &self.mixed * DVector::from_column_slice(y) - lx
    }

    fn spray(&self, y: &[f64]) -> DVector<f64> {
        &self.g_inv * self.spray_source(y) * 0.25
    }
}

impl LagrangeSpace {
    pub fn new(lagrangian: &ScalarExpression) -> Result<Self> {
        Ok(Self {
            lagrangian: Partials::new(lagrangian, 3)?,
        })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        Self::new(&ScalarExpression::parse(text, dim)?)
    }

    pub fn lagrangian(&self) -> &ScalarExpression {
        self.lagrangian.expression()
    }

    pub fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    /// The canonic semispray as a [`Spray`].
    pub fn canonic_spray(&self) -> CanonicSpray<'_> {
        CanonicSpray(self)
    }

    fn local(&self, u: &Point, order: usize) -> Result<Local> {
        check_dim(self.dim(), u.dim())?;
        let n = self.dim();
        let jet = self.lagrangian.jet(u, order)?;
        let g = DMatrix::from_fn(n, n, |i, j| 0.5 * jet.partial2(Coord::Y(i), Coord::Y(j)));
        let (g_inv, det) = invert(&g).map_err(|det| Error::DegenerateLagrangian { det })?;
        let mixed = DMatrix::from_fn(n, n, |k, h| jet.partial2(Coord::Y(k), Coord::X(h)));
        Ok(Local {
            jet,
            g,
            g_inv,
            det,
            mixed,
        })
    }

    /// `1/4 (d2L/dy^i dx^j - d2L/dx^i dy^j)`, the target skew part of the
    /// lowered canonic connection.
    pub fn skew_target(&self, u: &Point) -> Result<DMatrix<f64>> {
        Ok(self.local(u, 2)?.skew_mixed() * 0.25)
    }
}

impl MetricField for LagrangeSpace {
    fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    fn metric_jet(&self, u: &Point) -> Result<MetricJet> {
        let local = self.local(u, 3)?;
        let n = self.dim();
        let third = |c: Coord| {
            DMatrix::from_fn(n, n, |i, j| {
                0.5 * local.jet.partial3(Coord::Y(i), Coord::Y(j), c)
            })
        };
        let dx = (0..n).map(|k| third(Coord::X(k))).collect();
        let dy = (0..n).map(|k| third(Coord::Y(k))).collect();
        Ok(MetricJet {
            g: local.g,
            inverse: local.g_inv,
            det: local.det,
            dx,
            dy,
        })
    }
}

/// The canonic semispray of a Lagrange space,
/// `G^i = 1/4 g^ik (d2L/dy^k dx^h y^h - dL/dx^k)`.
///
/// Its `y`-Jacobian is computed by differentiating that closed form, so it
/// is independent of [`unique_connection`].
#[derive(Debug, Clone, Copy)]
pub struct CanonicSpray<'a>(pub &'a LagrangeSpace);

impl Spray for CanonicSpray<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn coefficients(&self, u: &Point) -> Result<DVector<f64>> {
        Ok(self.0.local(u, 2)?.spray(u.y()))
    }

    fn y_jacobian(&self, u: &Point) -> Result<DMatrix<f64>> {
        // dG/dy^j = g^-1 (-(dg/dy^j) G + 1/4 db/dy^j)
        let local = self.0.local(u, 3)?;
        let n = self.dim();
        let y = u.y();
        let spray = local.spray(y);
        let a = local.skew_mixed();
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let cj = Coord::Y(j);
            let mut col = DVector::zeros(n);
            for k in 0..n {
                let ck = Coord::Y(k);
                let dg_g: f64 = (0..n)
                    .map(|l| 0.5 * local.jet.partial3(ck, Coord::Y(l), cj) * spray[l])
                    .sum();
                let db: f64 = (0..n)
                    .map(|h| local.jet.partial3(ck, Coord::X(h), cj) * y[h])
                    .sum::<f64>()
                    + a[(k, j)];
                col[k] = -dg_g + 0.25 * db;
            }
            out.set_column(j, &(&local.g_inv * col));
        }
        Ok(out)
    }
}

/// `g_ij = 1/2 d2L/dy^i dy^j`.
pub fn lagrange_metric(lsp: &LagrangeSpace, u: &Point) -> Result<DMatrix<f64>> {
    Ok(lsp.local(u, 2)?.g)
}

/// Canonic semispray coefficients `G^i(u)`.
pub fn canonic_semispray(lsp: &LagrangeSpace, u: &Point) -> Result<DVector<f64>> {
    lsp.canonic_spray().coefficients(u)
}

/// `E_L = y^i dL/dy^i - L`.
pub fn energy(lsp: &LagrangeSpace, u: &Point) -> Result<f64> {
    check_dim(lsp.dim(), u.dim())?;
    let jet = lsp.lagrangian.jet(u, 1)?;
    let ly: f64 = (0..lsp.dim())
        .map(|i| u.y()[i] * jet.partial(Coord::Y(i)))
        .sum();
    Ok(ly - jet.value())
}

/// The unique nonlinear connection compatible with both the metric and the
/// Cartan form:
/// `N^i_j = 1/2 g^ik [S(g_kj) + 1/2 (d2L/dy^k dx^j - d2L/dx^k dy^j)]`.
pub fn unique_connection(lsp: &LagrangeSpace, u: &Point) -> Result<ConnectionValue> {
    let local = lsp.local(u, 3)?;
    let spray = local.spray(u.y());
    let jet = lsp.metric_jet(u)?;
    let s_g = jet.along_spray(u.y(), &spray);
    let n = (&local.g_inv * (s_g + local.skew_mixed() * 0.5)) * 0.5;
    Ok(ConnectionValue::new(u.clone(), n).with_metric(&local.g))
}

/// Components of the Cartan form written in the Berwald cobasis,
/// `omega = g_ij dy^j ^ dx^i + H_ij dx^j ^ dx^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticBlocks {
    /// `g_ij`
    pub metric_block: DMatrix<f64>,
    /// `H_ij = -N_[ij] + 1/4 (d2L/dy^i dx^j - d2L/dx^i dy^j)`, skew.
    pub horizontal_block: DMatrix<f64>,
}

/// Splits the Cartan form against the connection `n`. The horizontal block
/// vanishes iff the horizontal distribution of `n` is Lagrangian.
pub fn symplectic_adapted(
    lsp: &LagrangeSpace,
    n: &DMatrix<f64>,
    u: &Point,
) -> Result<SymplecticBlocks> {
    check_dim(lsp.dim(), n.nrows())?;
    let local = lsp.local(u, 2)?;
    let lowered_skew = skew_part(&(&local.g * n));
    Ok(SymplecticBlocks {
        horizontal_block: local.skew_mixed() * 0.25 - lowered_skew,
        metric_block: local.g,
    })
}

/// Matrix `W_ab = omega(e_a, e_b)` of the Cartan form in the natural frame
/// `(d/dx, d/dy)`: `[[-A/2, -g], [g, 0]]` with `A` the skew mixed Hessian.
pub fn cartan_form(lsp: &LagrangeSpace, u: &Point) -> Result<DMatrix<f64>> {
    let local = lsp.local(u, 2)?;
    let n = lsp.dim();
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    w.view_mut((0, 0), (n, n))
        .copy_from(&(local.skew_mixed() * -0.5));
    w.view_mut((0, n), (n, n)).copy_from(&(-&local.g));
    w.view_mut((n, 0), (n, n)).copy_from(&local.g);
    Ok(w)
}

/// Metric connection `N^c + O X` built on the canonic connection.
pub fn lagrange_family_member(
    lsp: &LagrangeSpace,
    x: &Tensor11,
    u: &Point,
) -> Result<ConnectionValue> {
    let nc = unique_connection(lsp, u)?;
    family_member(&nc, x, lsp, u)
}
