use semispray::flows::{
    conservation_report, integrate_sode, parallel_transport, Trajectory, INTEGRATOR_ORDER,
};
use semispray::geometry::{
    GLMetricField, InducedConnection, LagrangeSpace, MetricConnectionField, SemisprayField,
};
use semispray::Point;

fn pt(x: &[f64], y: &[f64]) -> Point {
    Point::new(x.to_vec(), y.to_vec()).unwrap()
}

fn poincare() -> LagrangeSpace {
    LagrangeSpace::parse("(y1^2 + y2^2)/(x2^2)", 2).unwrap()
}

fn poincare_orbit(h: f64) -> Trajectory {
    let l = poincare();
    let steps = (1.0 / h).round() as usize;
    integrate_sode(&l.canonic_spray(), &pt(&[0.0, 1.0], &[1.0, 0.0]), h, steps).unwrap()
}

#[test]
fn flat_geodesics_are_exact() {
    let flat = LagrangeSpace::parse("y1^2 + y2^2", 2).unwrap();
    let traj = integrate_sode(
        &flat.canonic_spray(),
        &pt(&[0.0, 0.0], &[1.0, 2.0]),
        0.01,
        100,
    )
    .unwrap();
    for (t, u) in traj.samples() {
        assert!((u.x()[0] - t).abs() < 1e-12);
        assert!((u.x()[1] - 2.0 * t).abs() < 1e-12);
    }
    assert_eq!(conservation_report(&flat, &traj).unwrap().max_drift, 0.0);
}

#[test]
fn poincare_geodesic_follows_the_unit_circle() {
    // x1 = tanh t, x2 = sech t
    let traj = poincare_orbit(1e-3);
    let (t, u) = traj.last();
    assert!((u.x()[0] - t.tanh()).abs() < 1e-10);
    assert!((u.x()[1] - 1.0 / t.cosh()).abs() < 1e-10);
}

#[test]
fn poincare_energy_is_conserved() {
    let report = conservation_report(&poincare(), &poincare_orbit(1e-3)).unwrap();
    assert!(report.max_drift < 1e-8, "{}", report.max_drift);
    assert_eq!(report.samples.len(), 1001);
}

#[test]
fn energy_drift_converges_at_fourth_order() {
    let l = poincare();
    let drift = |h| {
        conservation_report(&l, &poincare_orbit(h))
            .unwrap()
            .max_drift
    };
    let hs = [0.1, 0.05, 0.025];
    let d: Vec<f64> = hs.iter().map(|&h| drift(h)).collect();
    for w in d.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(
            (order - f64::from(INTEGRATOR_ORDER)).abs() < 0.2,
            "{d:?} order {order}"
        );
    }
}

#[test]
fn perturbed_spray_does_not_conserve_energy() {
    let perturbed = SemisprayField::parse(&["-y1*y2/x2 + 0.05", "(y1^2 - y2^2)/(2*x2)"]).unwrap();
    let traj = integrate_sode(&perturbed, &pt(&[0.0, 1.0], &[1.0, 0.0]), 1e-3, 1000).unwrap();
    assert!(conservation_report(&poincare(), &traj).unwrap().max_drift > 1e-3);
}

#[test]
fn metric_connection_preserves_length() {
    let l = poincare();
    let spray = l.canonic_spray();
    let traj = poincare_orbit(1e-3);
    let conn = MetricConnectionField {
        spray: &spray,
        metric: &l,
    };
    let x = parallel_transport(&spray, &conn, &traj, &[1.0, 0.0]).unwrap();
    assert!(x.norm_drift(&l, &traj).unwrap() < 1e-7);
}

#[test]
fn non_metric_connection_changes_length() {
    let s = SemisprayField::parse(&["x1*y2", "0"]).unwrap();
    let g = GLMetricField::identity(2);
    let traj = integrate_sode(&s, &pt(&[1.0, 0.0], &[0.5, 0.5]), 1e-3, 1000).unwrap();
    let x = parallel_transport(&s, &InducedConnection(&s), &traj, &[0.0, 1.0]).unwrap();
    assert!(x.norm_drift(&g, &traj).unwrap() > 1e-3);
    let conn = MetricConnectionField {
        spray: &s,
        metric: &g,
    };
    let x = parallel_transport(&s, &conn, &traj, &[0.0, 1.0]).unwrap();
    assert!(x.norm_drift(&g, &traj).unwrap() < 1e-7);
}

#[test]
fn transport_is_linear() {
    let l = poincare();
    let spray = l.canonic_spray();
    let traj = poincare_orbit(1e-2);
    let conn = MetricConnectionField {
        spray: &spray,
        metric: &l,
    };
    let run = |x0: &[f64]| parallel_transport(&spray, &conn, &traj, x0).unwrap();
    let (a, b) = (1.7, -0.3);
    let x = run(&[1.0, 2.0]);
    let y = run(&[-0.5, 0.25]);
    let z = run(&[a * 1.0 + b * -0.5, a * 2.0 + b * 0.25]);
    for ((_, xs), ((_, ys), (_, zs))) in x.samples().iter().zip(y.samples().iter().zip(z.samples()))
    {
        assert!((zs - (xs * a + ys * b)).amax() < 1e-10);
    }
}
