use nalgebra::{DMatrix, DVector};

use super::{check_dim, MetricField, MetricJet, Spray};
use crate::calculus::Partials;
use crate::error::{Error, Result};
use crate::expr::{Coord, Point, ScalarExpression};

/// Semispray given by closed-form coefficients `G^i(x, y)`.
#[derive(Debug, Clone)]
pub struct SemisprayField {
    coefficients: Vec<Partials>,
}

impl SemisprayField {
    pub fn new(coefficients: Vec<ScalarExpression>) -> Result<Self> {
        let n = coefficients.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "semispray needs at least one coefficient".into(),
            ));
        }
        let coefficients = coefficients
            .iter()
            .map(|e| {
                check_dim(n, e.dim())?;
                Partials::new(e, 1)
            })
            .collect::<Result<_>>()?;
        Ok(Self { coefficients })
    }

    /// Parses one coefficient per entry; the dimension is the entry count.
    pub fn parse<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        let n = texts.len();
        Self::new(
            texts
                .iter()
                .map(|t| ScalarExpression::parse(t.as_ref(), n))
                .collect::<Result<_>>()?,
        )
    }

    pub fn coefficient(&self, i: usize) -> &ScalarExpression {
        self.coefficients[i].expression()
    }
}

impl Spray for SemisprayField {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn coefficients(&self, u: &Point) -> Result<DVector<f64>> {
        check_dim(self.dim(), u.dim())?;
        let values = self
            .coefficients
            .iter()
            .map(|p| p.expression().evaluate(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(values))
    }

    fn y_jacobian(&self, u: &Point) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), u.dim())?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, p) in self.coefficients.iter().enumerate() {
            for j in 0..n {
                m[(i, j)] = p.first(Coord::Y(j).slot(n)).evaluate(u)?;
            }
        }
        Ok(m)
    }
}

/// Generalized Lagrange metric given entrywise. Only the upper triangle is
/// stored, so symmetry holds by construction.
#[derive(Debug, Clone)]
pub struct GLMetricField {
    dim: usize,
    // row-major upper triangle, i <= j
    entries: Vec<Partials>,
}

fn upper_index(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl GLMetricField {
    /// `upper` lists `g_ij` for `i <= j`, row by row.
    pub fn new(dim: usize, upper: Vec<ScalarExpression>) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if dim == 0 || upper.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "a metric of dimension {dim} needs {expected} upper-triangle entries, got {}",
                upper.len()
            )));
        }
        let entries = upper
            .iter()
            .map(|e| {
                check_dim(dim, e.dim())?;
                Partials::new(e, 1)
            })
            .collect::<Result<_>>()?;
        Ok(Self { dim, entries })
    }

    pub fn parse<S: AsRef<str>>(dim: usize, upper: &[S]) -> Result<Self> {
        Self::new(
            dim,
            upper
                .iter()
                .map(|t| ScalarExpression::parse(t.as_ref(), dim))
                .collect::<Result<_>>()?,
        )
    }

    /// The flat metric `delta_ij`.
    pub fn identity(dim: usize) -> Self {
        let upper = (0..dim)
            .flat_map(|i| (i..dim).map(move |j| (i, j)))
            .map(|(i, j)| ScalarExpression::constant(if i == j { 1.0 } else { 0.0 }, dim))
            .collect();
        Self::new(dim, upper).expect("identity metric is well formed")
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpression {
        self.entries[upper_index(i, j, self.dim)].expression()
    }

    /// `g_ij(u)` without derivatives or inversion.
    pub fn value(&self, u: &Point) -> Result<DMatrix<f64>> {
        check_dim(self.dim, u.dim())?;
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j).evaluate(u)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}

impl MetricField for GLMetricField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_jet(&self, u: &Point) -> Result<MetricJet> {
        check_dim(self.dim, u.dim())?;
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        let mut dx = vec![DMatrix::zeros(n, n); n];
        let mut dy = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                let jet = self.entries[upper_index(i, j, n)].jet(u, 1)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for k in 0..n {
                    let vx = jet.partial(Coord::X(k));
                    let vy = jet.partial(Coord::Y(k));
                    dx[k][(i, j)] = vx;
                    dx[k][(j, i)] = vx;
                    dy[k][(i, j)] = vy;
                    dy[k][(j, i)] = vy;
                }
            }
        }
        MetricJet::new(g, dx, dy, |det| Error::SingularMetric { det })
    }
}

/// A `(1,1)` d-tensor `X^m_k`, either constant or given by expressions.
#[derive(Debug, Clone)]
pub enum Tensor11 {
    Constant(DMatrix<f64>),
    /// Row-major `n x n` expressions, `entries[m * n + k] = X^m_k`.
    Field {
        dim: usize,
        entries: Vec<ScalarExpression>,
    },
}

impl Tensor11 {
    pub fn zero(dim: usize) -> Self {
        Tensor11::Constant(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            Tensor11::Constant(m) => m.nrows(),
            Tensor11::Field { dim, .. } => *dim,
        }
    }

    pub fn at(&self, u: &Point) -> Result<DMatrix<f64>> {
        match self {
            Tensor11::Constant(m) => {
                check_dim(m.nrows(), u.dim())?;
                check_dim(m.nrows(), m.ncols())?;
                Ok(m.clone())
            }
            Tensor11::Field { dim, entries } => {
                check_dim(*dim, u.dim())?;
                let values = entries
                    .iter()
                    .map(|e| e.evaluate(u))
                    .collect::<Result<Vec<_>>>()?;
                Ok(DMatrix::from_row_slice(*dim, *dim, &values))
            }
        }
    }
}

impl From<DMatrix<f64>> for Tensor11 {
    fn from(m: DMatrix<f64>) -> Self {
        Tensor11::Constant(m)
    }
}
