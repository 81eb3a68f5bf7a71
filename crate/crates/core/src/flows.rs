//! Integral curves of a semispray, parallel transport of vertical vectors
//! along them, and energy diagnostics.
//!
//! All integrators are fixed-step classical Runge-Kutta of order 4.

use nalgebra::DVector;
use thiserror::Error;

use crate::error::Error;
use crate::expr::Point;
use crate::geometry::{energy, ConnectionField, LagrangeSpace, MetricField, Spray};
use crate::sampling::DomainBox;

/// Default speed bound `|y|` above which an orbit is treated as blowing up.
pub const BLOW_UP_SPEED: f64 = 1e6;

/// Order of the integrators in this module.
pub const INTEGRATOR_ORDER: u32 = 4;

/// Samples `(t, u(t))` of an integral curve on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, Point)>,
    step: f64,
}

impl Trajectory {
    pub fn samples(&self) -> &[(f64, Point)] {
        &self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn order(&self) -> u32 {
        INTEGRATOR_ORDER
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> &(f64, Point) {
        self.samples
            .last()
            .expect("a trajectory holds its initial point")
    }
}

/// Vertical vector samples `(t, X(t))` on the grid of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedVector {
    samples: Vec<(f64, DVector<f64>)>,
}

impl TransportedVector {
    pub fn samples(&self) -> &[(f64, DVector<f64>)] {
        &self.samples
    }

    pub fn last(&self) -> &(f64, DVector<f64>) {
        self.samples
            .last()
            .expect("transport holds its initial vector")
    }

    /// `g(X, X)` at every sample.
    pub fn norms<M: MetricField + ?Sized>(
        &self,
        metric: &M,
        traj: &Trajectory,
    ) -> Result<Vec<(f64, f64)>, Error> {
        self.samples
            .iter()
            .zip(traj.samples())
            .map(|((t, x), (_, u))| {
                let g = metric.metric_jet(u)?.g;
                Ok((*t, x.dot(&(g * x))))
            })
            .collect()
    }

    /// `max |g(X, X)(t) - g(X, X)(0)|`.
    pub fn norm_drift<M: MetricField + ?Sized>(
        &self,
        metric: &M,
        traj: &Trajectory,
    ) -> Result<f64, Error> {
        Ok(max_drift(&self.norms(metric, traj)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowErrorKind {
    /// A coefficient could not be evaluated.
    Evaluation(Error),
    /// `|y|` exceeded the speed bound or stopped being finite.
    BlowUp { speed: f64 },
    /// The chart coordinate with this index left the domain box.
    LeftDomain { coordinate: usize },
}

/// Abort of an integration. `t` is the last time with a valid state and
/// `partial` holds every accepted sample up to it.
#[derive(Debug, Clone, Error)]
#[error("integration stopped after t = {t}: {}", describe(.kind))]
pub struct FlowError {
    pub t: f64,
    pub kind: FlowErrorKind,
    pub partial: Trajectory,
}

fn describe(kind: &FlowErrorKind) -> String {
    match kind {
        FlowErrorKind::Evaluation(e) => e.to_string(),
        FlowErrorKind::BlowUp { speed } => format!("blow-up, |y| = {speed:e}"),
        FlowErrorKind::LeftDomain { coordinate } => {
            format!("coordinate {coordinate} left the domain box")
        }
    }
}

/// Guards applied after every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub max_speed: f64,
    pub domain: Option<DomainBox>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            max_speed: BLOW_UP_SPEED,
            domain: None,
        }
    }
}

/// Integrates `x'' + 2 G(x, x') = 0` from `u0` with step `h`.
pub fn integrate_sode<S: Spray + ?Sized>(
    spray: &S,
    u0: &Point,
    h: f64,
    steps: usize,
) -> Result<Trajectory, FlowError> {
    integrate_sode_with(spray, u0, h, steps, &IntegrationOptions::default())
}

fn vector_field<S: Spray + ?Sized>(spray: &S, z: &[f64]) -> Result<Vec<f64>, Error> {
    let u = Point::from_slots(z)?;
    let g = spray.coefficients(&u)?;
    Ok(u.y()
        .iter()
        .copied()
        .chain(g.iter().map(|v| -2.0 * v))
        .collect())
}

fn axpy(z: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    z.iter().zip(k).map(|(z, k)| z + a * k).collect()
}

pub fn integrate_sode_with<S: Spray + ?Sized>(
    spray: &S,
    u0: &Point,
    h: f64,
    steps: usize,
    options: &IntegrationOptions,
) -> Result<Trajectory, FlowError> {
    let mut traj = Trajectory {
        samples: Vec::with_capacity(steps + 1),
        step: h,
    };
    let fail = |traj: Trajectory, kind| {
        let t = traj.samples.last().map_or(0.0, |s| s.0);
        Err(FlowError {
            t,
            kind,
            partial: traj,
        })
    };
    if !(h > 0.0 && h.is_finite()) {
        return fail(
            traj,
            FlowErrorKind::Evaluation(Error::InvalidArgument(format!(
                "step must be positive, got {h}"
            ))),
        );
    }
    if spray.dim() != u0.dim() {
        let e = Error::DimensionMismatch {
            expected: spray.dim(),
            found: u0.dim(),
        };
        return fail(traj, FlowErrorKind::Evaluation(e));
    }
    if let Some(kind) = guard(u0, options) {
        return fail(traj, kind);
    }
    traj.samples.push((0.0, u0.clone()));
    let mut z = u0.slots();
    for step in 1..=steps {
        let next = match rk4_step(spray, &z, h) {
            Ok(next) => next,
            Err(e) => return fail(traj, FlowErrorKind::Evaluation(e)),
        };
        let u = Point::from_slots(&next).expect("even slot count");
        if let Some(kind) = guard(&u, options) {
            return fail(traj, kind);
        }
        traj.samples.push((step as f64 * h, u));
        z = next;
    }
    Ok(traj)
}

fn rk4_step<S: Spray + ?Sized>(spray: &S, z: &[f64], h: f64) -> Result<Vec<f64>, Error> {
    let k1 = vector_field(spray, z)?;
    let k2 = vector_field(spray, &axpy(z, 0.5 * h, &k1))?;
    let k3 = vector_field(spray, &axpy(z, 0.5 * h, &k2))?;
    let k4 = vector_field(spray, &axpy(z, h, &k3))?;
    Ok((0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn guard(u: &Point, options: &IntegrationOptions) -> Option<FlowErrorKind> {
    let speed = u.y().iter().map(|v| v * v).sum::<f64>().sqrt();
    if !speed.is_finite() || speed > options.max_speed || u.x().iter().any(|v| !v.is_finite()) {
        return Some(FlowErrorKind::BlowUp { speed });
    }
    options
        .domain
        .as_ref()
        .and_then(|d| d.violation(u))
        .map(|coordinate| FlowErrorKind::LeftDomain { coordinate })
}

/// Solves `dX^i/dt = -N^i_j(u(t)) X^j` on the grid of `traj`, i.e. transports
/// `X0` so that its dynamical covariant derivative vanishes.
///
/// RK4 midpoint stages use the cubic Hermite interpolant of the orbit built
/// from the stored samples and the semispray velocity `(y, -2G)`.
pub fn parallel_transport<S, C>(
    spray: &S,
    conn: &C,
    traj: &Trajectory,
    x0: &[f64],
) -> Result<TransportedVector, Error>
where
    S: Spray + ?Sized,
    C: ConnectionField + ?Sized,
{
    let n = spray.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let h = traj.step();
    let samples = traj.samples();
    let mut x = DVector::from_column_slice(x0);
    let mut out = Vec::with_capacity(samples.len());
    out.push((samples[0].0, x.clone()));
    let mut n0 = conn.coefficients(&samples[0].1)?;
    let mut d0 = vector_field(spray, &samples[0].1.slots())?;
    for w in samples.windows(2) {
        let (s0, s1) = (w[0].1.slots(), w[1].1.slots());
        let d1 = vector_field(spray, &s1)?;
        let mid: Vec<f64> = (0..s0.len())
            .map(|i| 0.5 * (s0[i] + s1[i]) + h * (d0[i] - d1[i]) / 8.0)
            .collect();
        let n_mid = conn.coefficients(&Point::from_slots(&mid)?)?;
        let n1 = conn.coefficients(&w[1].1)?;

        let k1 = -(&n0 * &x);
        let k2 = -(&n_mid * (&x + &k1 * (0.5 * h)));
        let k3 = -(&n_mid * (&x + &k2 * (0.5 * h)));
        let k4 = -(&n1 * (&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push((w[1].0, x.clone()));
        n0 = n1;
        d0 = d1;
    }
    Ok(TransportedVector { samples: out })
}

/// Energy `E_L` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub samples: Vec<(f64, f64)>,
    /// `max |E(t) - E(0)|`
    pub max_drift: f64,
}

pub fn conservation_report(
    lsp: &LagrangeSpace,
    traj: &Trajectory,
) -> Result<ConservationReport, Error> {
    let samples = traj
        .samples()
        .iter()
        .map(|(t, u)| Ok((*t, energy(lsp, u)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(ConservationReport {
        max_drift: max_drift(&samples),
        samples,
    })
}

fn max_drift(samples: &[(f64, f64)]) -> f64 {
    let Some(&(_, first)) = samples.first() else {
        return 0.0;
    };
    samples
        .iter()
        .fold(0.0, |acc, (_, v)| acc.max((v - first).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SemisprayField;
    use nalgebra::DMatrix;

    fn pt(x: &[f64], y: &[f64]) -> Point {
        Point::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn straight_lines_are_exact() {
        let flat = SemisprayField::parse(&["0", "0"]).unwrap();
        let traj = integrate_sode(&flat, &pt(&[0.0, 0.0], &[1.0, 2.0]), 0.01, 100).unwrap();
        let (t, u) = traj.last();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((u.x()[0] - 1.0).abs() < 1e-12);
        assert!((u.x()[1] - 2.0).abs() < 1e-12);
        assert_eq!(traj.len(), 101);
    }

    #[test]
    fn rejects_bad_step() {
        let flat = SemisprayField::parse(&["0"]).unwrap();
        let e = integrate_sode(&flat, &pt(&[0.0], &[1.0]), 0.0, 10).unwrap_err();
        assert!(matches!(
            e.kind,
            FlowErrorKind::Evaluation(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn blow_up_guard() {
        // y' = 2 y^3 from y = 10 blows up at t = 1/200
        let s = SemisprayField::parse(&["-y1^3"]).unwrap();
        let e = integrate_sode(&s, &pt(&[0.0], &[10.0]), 1e-4, 1000).unwrap_err();
        assert!(matches!(e.kind, FlowErrorKind::BlowUp { .. }));
        assert!(e.t > 0.0 && e.t < 0.006);
        assert_eq!(e.partial.last().0, e.t);
    }

    #[test]
    fn domain_guard() {
        let flat = SemisprayField::parse(&["0"]).unwrap();
        let options = IntegrationOptions {
            domain: Some(DomainBox::new(vec![(-1.0, 1.0), (-5.0, 5.0)]).unwrap()),
            ..Default::default()
        };
        let e = integrate_sode_with(&flat, &pt(&[0.0], &[1.0]), 0.1, 50, &options).unwrap_err();
        assert_eq!(e.kind, FlowErrorKind::LeftDomain { coordinate: 0 });
        assert!((e.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_error_reports_last_valid_time() {
        // x1 decreases through 0 where 1/x1 is undefined
        let s = SemisprayField::parse(&["0*y1 + 1/x1 - 1/x1"]).unwrap();
        let e = integrate_sode(&s, &pt(&[1.0], &[-1.0]), 0.25, 10).unwrap_err();
        assert!(matches!(e.kind, FlowErrorKind::Evaluation(_)));
        assert!(e.t < 1.0);
    }

    #[test]
    fn zero_connection_keeps_vectors() {
        let flat = SemisprayField::parse(&["0", "0"]).unwrap();
        let traj = integrate_sode(&flat, &pt(&[0.0, 0.0], &[1.0, 0.5]), 0.1, 10).unwrap();
        let zero = |_: &Point| Ok(DMatrix::<f64>::zeros(2, 2));
        let x = parallel_transport(&flat, &zero, &traj, &[0.3, -2.0]).unwrap();
        assert!(x.samples().iter().all(|(_, v)| v.as_slice() == [0.3, -2.0]));
    }

    #[test]
    fn constant_connection_gives_exponential() {
        let flat = SemisprayField::parse(&["0"]).unwrap();
        let traj = integrate_sode(&flat, &pt(&[0.0], &[1.0]), 0.01, 100).unwrap();
        let c = |_: &Point| Ok(DMatrix::from_element(1, 1, 0.7));
        let x = parallel_transport(&flat, &c, &traj, &[1.0]).unwrap();
        assert!((x.last().1[0] - (-0.7f64).exp()).abs() < 1e-10);
    }
}
