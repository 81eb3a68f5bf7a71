//! Pointwise verification sweeps behind `check`, `family` and `hermitian`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use semispray::flows::{conservation_report, integrate_sode};
use semispray::geometry::{
    almost_hermitian, cartan_form, family_member, helmholtz_residual, max_abs, metric_connection,
    metric_connection_forms, nabla_metric, symplectic_adapted, unique_connection, ConnectionValue,
    LagrangeSpace, MetricField, ObataPair, Spray, Tensor11,
};
use semispray::{Error, Point};

use crate::problem::{Model, ProblemDefinition, Tolerances};
use crate::report::{Report, Skipped};

/// Salt mixed into the definition seed for the random family tensors, so they
/// are not drawn from the same stream as the sample points.
const FAMILY_SALT: u64 = 0x5eed_fa31_1a00_0001;

/// Energy smoke run: step and step count.
const SMOKE_STEP: f64 = 1e-3;
const SMOKE_STEPS: usize = 100;

#[derive(Debug, Clone, Copy)]
enum Tol {
    Algebraic,
    Derived,
}

impl Tol {
    fn of(self, t: &Tolerances) -> f64 {
        match self {
            Tol::Algebraic => t.algebraic,
            Tol::Derived => t.derived,
        }
    }
}

type Rows = Vec<(&'static str, Tol, f64)>;
type PointResult = Result<Rows, Error>;

/// Runs `eval` at every point concurrently and assembles a sorted report.
fn sweep<F>(def: &ProblemDefinition, points: &[Point], eval: F) -> Report
where
    F: Fn(usize, &Point) -> PointResult + Sync,
{
    let results: Vec<PointResult> = points
        .par_iter()
        .enumerate()
        .map(|(i, u)| eval(i, u))
        .collect();
    let mut report = Report::default();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(rows) => {
                for (check, tol, residual) in rows {
                    report.push(check, i, residual, tol.of(&def.tolerances));
                }
            }
            Err(e) => {
                let kind = if e.is_singular_point() {
                    "singular point"
                } else {
                    "evaluation error"
                };
                report.skipped.push(Skipped {
                    point: i,
                    reason: format!("{kind}: {e}"),
                });
            }
        }
    }
    report.finish();
    report
}

/// Random constant `(1,1)` tensor for point `index`, entries in `[-1, 1]`.
pub fn family_tensor(seed: u64, index: usize, dim: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ FAMILY_SALT);
    rng.set_stream(index as u64);
    DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..=1.0))
}

/// `max |O*(N - N^c)|` and `max |g_ij|` of `N`, the two family checks.
fn family_residuals(
    spray: &dyn Spray,
    metric: &dyn MetricField,
    nc: &ConnectionValue,
    x: &Tensor11,
    u: &Point,
) -> Result<(ConnectionValue, f64, f64), Error> {
    let member = family_member(nc, x, metric, u)?;
    let metricity = max_abs(&nabla_metric(spray, &member.coefficients, metric, u)?);
    let jet = metric.metric_jet(u)?;
    let obata = ObataPair::new(&jet.g, &jet.inverse);
    let projector = max_abs(&obata.apply_star(&(&member.coefficients - &nc.coefficients)));
    Ok((member, metricity, projector))
}

fn generalized_checks(
    spray: &dyn Spray,
    metric: &dyn MetricField,
    seed: u64,
    index: usize,
    u: &Point,
) -> PointResult {
    let nc = metric_connection(spray, metric, u)?;
    let metricity = max_abs(&nabla_metric(spray, &nc.coefficients, metric, u)?);
    let forms = metric_connection_forms(spray, metric, u)?;
    let x = Tensor11::Constant(family_tensor(seed, index, u.dim()));
    let (_, family, projector) = family_residuals(spray, metric, &nc, &x, u)?;
    let helmholtz = max_abs(&helmholtz_residual(spray, metric, u)?);
    Ok(vec![
        ("metricity", Tol::Derived, metricity),
        ("equivalence", Tol::Algebraic, forms.max_disagreement()),
        ("family", Tol::Derived, family.max(projector)),
        ("helmholtz", Tol::Derived, helmholtz),
    ])
}

fn lagrangian_checks(l: &LagrangeSpace, u: &Point) -> PointResult {
    let spray = l.canonic_spray();
    let nc = unique_connection(l, u)?;
    let jacobian = spray.y_jacobian(u)?;
    let uniqueness = max_abs(&(&nc.coefficients - jacobian));

    let jet = l.metric_jet(u)?;
    let s_g = jet.along_spray(u.y(), &spray.coefficients(u)?);
    let lowered = nc
        .lowered
        .as_ref()
        .expect("unique connection carries its lowered form");
    let decomposition = max_abs(&(&lowered.symmetric * 2.0 - s_g))
        .max(max_abs(&(&lowered.skew - l.skew_target(u)?)));

    let symplectic = max_abs(&symplectic_adapted(l, &nc.coefficients, u)?.horizontal_block);
    let ah = almost_hermitian(l, &nc.coefficients, u)?;
    let hermitian = ah.hermitian_defect(&cartan_form(l, u)?);

    let energy = match integrate_sode(&spray, u, SMOKE_STEP, SMOKE_STEPS) {
        Ok(traj) => {
            let report = conservation_report(l, &traj)?;
            report.max_drift / report.samples[0].1.abs().max(1.0)
        }
        Err(_) => f64::INFINITY,
    };

    Ok(vec![
        ("uniqueness", Tol::Derived, uniqueness),
        ("decomposition", Tol::Derived, decomposition),
        ("symplectic", Tol::Derived, symplectic),
        ("complex-structure", Tol::Algebraic, ah.complex_defect()),
        ("hermitian", Tol::Derived, hermitian),
        ("energy", Tol::Derived, energy),
    ])
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    pub expect_helmholtz_fail: bool,
}

/// Every identity for the definition's mode at every evaluation point.
pub fn run_check(def: &ProblemDefinition, options: CheckOptions) -> Report {
    let points = def.evaluation_points();
    let mut report = sweep(def, &points, |i, u| {
        let mut rows = def
            .model
            .with_fields(|spray, metric| generalized_checks(spray, metric, def.seed, i, u))?;
        if let Model::Lagrangian(l) = &def.model {
            rows.extend(lagrangian_checks(l, u)?);
        }
        Ok(rows)
    });
    if options.expect_helmholtz_fail {
        report.informational.push("helmholtz");
    }
    report
}

/// The connection the CLI reports for a definition: the canonic connection
/// of a Lagrange space, or the metric connection of a generalized pair.
pub fn model_connection(model: &Model, u: &Point) -> Result<ConnectionValue, Error> {
    match model {
        Model::Lagrangian(l) => unique_connection(l, u),
        Model::Generalized { metric, spray } => metric_connection(spray, metric, u),
    }
}

/// Family members for a fixed tensor, with their metricity and projector
/// residuals. In Lagrangian mode the horizontal block of the Cartan form is
/// reported as informational: deformations are metric but generally not
/// symplectic.
pub fn run_family(def: &ProblemDefinition, x: &Tensor11) -> (Report, Vec<Option<ConnectionValue>>) {
    let points = def.evaluation_points();
    let members: Vec<Result<(ConnectionValue, Rows), Error>> = points
        .par_iter()
        .map(|u| {
            let nc = model_connection(&def.model, u)?;
            let (member, metricity, projector) = def
                .model
                .with_fields(|spray, metric| family_residuals(spray, metric, &nc, x, u))?;
            let mut rows = vec![
                ("family-metricity", Tol::Derived, metricity),
                ("family-projector", Tol::Derived, projector),
            ];
            if let Model::Lagrangian(l) = &def.model {
                let hh = symplectic_adapted(l, &member.coefficients, u)?.horizontal_block;
                rows.push(("family-symplectic", Tol::Derived, max_abs(&hh)));
            }
            Ok((member, rows))
        })
        .collect();
    let connections = members
        .iter()
        .map(|m| m.as_ref().ok().map(|(c, _)| c.clone()))
        .collect();
    let rows: Vec<PointResult> = members
        .into_iter()
        .map(|m| m.map(|(_, rows)| rows))
        .collect();
    let mut report = sweep(def, &points, |i, _| rows[i].clone());
    report.informational.push("family-symplectic");
    (report, connections)
}

/// Almost complex structure and Sasaki-type metric of the reported
/// connection, and the Hermitian identity against the Cartan form in
/// Lagrangian mode.
pub fn run_hermitian(def: &ProblemDefinition) -> Report {
    let points = def.evaluation_points();
    sweep(def, &points, |_, u| {
        let nc = model_connection(&def.model, u)?;
        let ah = def
            .model
            .with_fields(|_, metric| almost_hermitian(metric, &nc.coefficients, u))?;
        let mut rows = vec![
            ("complex-structure", Tol::Algebraic, ah.complex_defect()),
            ("isometry", Tol::Algebraic, ah.isometry_defect()),
            ("projectors", Tol::Algebraic, ah.frame.projector_defect()),
        ];
        if let Model::Lagrangian(l) = &def.model {
            rows.push((
                "hermitian",
                Tol::Derived,
                ah.hermitian_defect(&cartan_form(l, u)?),
            ));
        }
        Ok(rows)
    })
}
