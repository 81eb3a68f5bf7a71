use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semispray::geometry::{
    almost_hermitian, cartan_form, connection_from_semispray, family_member, helmholtz_residual,
    metric_connection, metric_connection_forms, nabla_metric, symplectic_adapted,
    unique_connection, AdaptedFrame, LagrangeSpace, MetricField, ObataPair, SemisprayField, Spray,
    Tensor11,
};
use semispray::testing::{
    random_lagrangian, random_metric, random_point, random_spray, random_tensor,
};
use semispray::Point;

const DERIVED: f64 = 1e-9;
const ALGEBRAIC: f64 = 1e-12;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_connection_is_metric(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let g = random_metric(&mut r, dim);
        let s = random_spray(&mut r, dim);
        for _ in 0..10 {
            let u = random_point(&mut r, dim, 1.0);
            let nc = metric_connection(&s, &g, &u).unwrap();
            let res = nabla_metric(&s, &nc.coefficients, &g, &u).unwrap();
            prop_assert!(res.amax() < DERIVED, "{res}");
        }
    }

    #[test]
    fn three_forms_agree(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let g = random_metric(&mut r, dim);
        let s = random_spray(&mut r, dim);
        let u = random_point(&mut r, dim, 1.0);
        prop_assert!(metric_connection_forms(&s, &g, &u).unwrap().max_disagreement() < ALGEBRAIC);
    }

    #[test]
    fn family_members_are_metric_and_differ_by_the_image_of_o(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let g = random_metric(&mut r, dim);
        let s = random_spray(&mut r, dim);
        let u = random_point(&mut r, dim, 1.0);
        let nc = metric_connection(&s, &g, &u).unwrap();
        let x = Tensor11::Constant(random_tensor(&mut r, dim));
        let m = family_member(&nc, &x, &g, &u).unwrap();
        prop_assert!(nabla_metric(&s, &m.coefficients, &g, &u).unwrap().amax() < DERIVED);

        let jet = g.metric_jet(&u).unwrap();
        let obata = ObataPair::new(&jet.g, &jet.inverse);
        let diff = &m.coefficients - &nc.coefficients;
        prop_assert!(obata.apply_star(&diff).amax() < DERIVED);
        prop_assert!((&jet.g * &diff + (&jet.g * &diff).transpose()).amax() < DERIVED);
        prop_assert!(obata.projector_defect() < ALGEBRAIC);
    }

    #[test]
    fn canonic_pairs_satisfy_helmholtz_and_uniqueness(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let l = random_lagrangian(&mut r, dim);
        let spray = l.canonic_spray();
        let u = random_point(&mut r, dim, 1.0);
        prop_assert!(helmholtz_residual(&spray, &l, &u).unwrap().amax() < DERIVED);

        let nc = unique_connection(&l, &u).unwrap();
        let induced = connection_from_semispray(&spray, &u).unwrap();
        prop_assert!((&nc.coefficients - &induced.coefficients).amax() < DERIVED);

        let jet = l.metric_jet(&u).unwrap();
        let s_g = jet.along_spray(u.y(), &spray.coefficients(&u).unwrap());
        let low = nc.lowered.as_ref().unwrap();
        prop_assert!((&low.symmetric * 2.0 - s_g).amax() < DERIVED);
        prop_assert!((&low.skew - l.skew_target(&u).unwrap()).amax() < DERIVED);

        let blocks = symplectic_adapted(&l, &nc.coefficients, &u).unwrap();
        prop_assert!(blocks.horizontal_block.amax() < DERIVED);
    }

    #[test]
    fn horizontal_block_vanishes_exactly_for_the_right_skew_part(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let l = random_lagrangian(&mut r, dim);
        let u = random_point(&mut r, dim, 1.0);
        let nc = unique_connection(&l, &u).unwrap().coefficients;
        let g_inv = l.metric_jet(&u).unwrap().inverse;
        let d = random_tensor(&mut r, dim);
        let sym = &g_inv * (&d + d.transpose());
        let skew = &g_inv * (&d - d.transpose());
        let keep = symplectic_adapted(&l, &(&nc + sym), &u).unwrap();
        prop_assert!(keep.horizontal_block.amax() < DERIVED);
        let broken = symplectic_adapted(&l, &(&nc + skew), &u).unwrap();
        prop_assert!(broken.horizontal_block.amax() > 1e-6);
    }

    #[test]
    fn almost_hermitian_identities(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let l = random_lagrangian(&mut r, dim);
        let u = random_point(&mut r, dim, 1.0);
        let arbitrary = random_tensor(&mut r, dim) * 5.0;
        let ah = almost_hermitian(&l, &arbitrary, &u).unwrap();
        prop_assert!(ah.complex_defect() < ALGEBRAIC);

        let nc = unique_connection(&l, &u).unwrap();
        let ah = almost_hermitian(&l, &nc.coefficients, &u).unwrap();
        prop_assert!(ah.complex_defect() < ALGEBRAIC);
        prop_assert!(ah.hermitian_defect(&cartan_form(&l, &u).unwrap()) < DERIVED);
    }

    #[test]
    fn projectors_of_any_connection(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let frame = AdaptedFrame::new(&(random_tensor(&mut r, dim) * 3.0));
        prop_assert!(frame.projector_defect() < ALGEBRAIC);
        prop_assert_eq!(frame.tangent_horizontal_rank(), dim);
    }

    #[test]
    fn one_dimensional_family_is_a_single_connection(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_metric(&mut r, 1);
        let s = random_spray(&mut r, 1);
        let u = random_point(&mut r, 1, 1.0);
        let nc = metric_connection(&s, &g, &u).unwrap();
        let m = family_member(&nc, &Tensor11::Constant(random_tensor(&mut r, 1) * 10.0), &g, &u).unwrap();
        prop_assert!((m.coefficients - nc.coefficients).amax() < ALGEBRAIC);
    }
}

fn pt(x: &[f64], y: &[f64]) -> Point {
    Point::new(x.to_vec(), y.to_vec()).unwrap()
}

#[test]
fn poincare_connection_from_every_route() {
    let l = LagrangeSpace::parse("(y1^2 + y2^2)/(x2^2)", 2).unwrap();
    let christoffel = SemisprayField::parse(&["-y1*y2/x2", "(y1^2 - y2^2)/(2*x2)"]).unwrap();
    let u = pt(&[0.0, 1.0], &[1.0, 0.0]);
    let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let routes = [
        unique_connection(&l, &u).unwrap().coefficients,
        connection_from_semispray(&l.canonic_spray(), &u)
            .unwrap()
            .coefficients,
        connection_from_semispray(&christoffel, &u)
            .unwrap()
            .coefficients,
        metric_connection(&christoffel, &l, &u)
            .unwrap()
            .coefficients,
    ];
    for n in routes {
        assert!((n - &want).amax() < DERIVED);
    }
}

#[test]
fn helmholtz_control_is_minus_x1_everywhere() {
    let s = SemisprayField::parse(&["x1*y2", "0"]).unwrap();
    let g = semispray::geometry::GLMetricField::identity(2);
    let mut r = rng(5);
    for _ in 0..100 {
        let u = random_point(&mut r, 2, 2.0);
        let res = helmholtz_residual(&s, &g, &u).unwrap();
        assert!((res[(0, 1)] + u.x()[0]).abs() < ALGEBRAIC);
        assert!((res[(1, 0)] + u.x()[0]).abs() < ALGEBRAIC);
        assert!(res[(0, 0)].abs() < ALGEBRAIC && res[(1, 1)].abs() < ALGEBRAIC);
        let nc = metric_connection(&s, &g, &u).unwrap();
        assert!(nabla_metric(&s, &nc.coefficients, &g, &u).unwrap().amax() < DERIVED);
    }
}
