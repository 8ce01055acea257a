use proptest::prelude::*;

use shsverify::blowup::{
    certify_cone_contraction, classify_fixed_point, classify_linear_return, eye_boundary,
    find_fixed_points, recheck_archived_margins, suspend, CertificateConfig, ConeCertificate,
    ConeField, FixedPointType, OrbitType, SearchBox,
};
use shsverify::ham2d::{HamiltonianSpec, IntegratorConfig, Mat2, Point2};

#[test]
fn census_of_the_default_blowup() {
    let spec = HamiltonianSpec::blowup(1.0, 0.1);
    let c = find_fixed_points(&spec, SearchBox::centered(0.3), 61).unwrap();
    assert_eq!(c.count(FixedPointType::Hyperbolic), 2);
    assert_eq!(c.count(FixedPointType::Elliptic), 1);
    assert_eq!(c.points.len(), 3);
    for f in &c.points {
        assert!(f.residual <= 1e-10);
        let v = spec.vector_field(f.location).unwrap();
        assert!(v.norm() <= 1e-10);
    }
    let e = c.of_type(FixedPointType::Elliptic)[0];
    assert!(e.location.norm() < 1e-12);
}

#[test]
fn vanishing_amplitude_leaves_one_saddle() {
    let spec = HamiltonianSpec::blowup(1e-6, 0.1);
    let c = find_fixed_points(&spec, SearchBox::centered(0.3), 61).unwrap();
    assert_eq!(c.points.len(), 1);
    assert_eq!(c.points[0].kind, FixedPointType::Hyperbolic);
    assert!(c.points[0].location.norm() < 1e-6);
}

#[test]
fn eye_area_scales_with_eps_squared() {
    let cfg = IntegratorConfig::default();
    let a = eye_boundary(&HamiltonianSpec::blowup(1.0, 0.1), &cfg).unwrap();
    let b = eye_boundary(&HamiltonianSpec::blowup(1.0, 0.2), &cfg).unwrap();
    assert!((b.area() / a.area() / 4.0 - 1.0).abs() <= 0.02);
    for eye in [&a, &b] {
        assert!(eye.closure_gap <= eye.tolerance);
        for h in eye.hyperbolic {
            assert!(eye.distance_to_boundary(h) <= eye.tolerance);
        }
        assert!(eye.elliptic.iter().all(|&e| eye.contains(e)));
    }
}

#[test]
fn archived_certificate_survives_a_json_roundtrip() {
    let spec = HamiltonianSpec::blowup(-1.0, 0.01);
    let cert = certify_cone_contraction(&spec, &CertificateConfig::new(1.0, 200)).unwrap();
    assert!(cert.verdict.passed());
    let text = serde_json::to_string(&cert).unwrap();
    let back: ConeCertificate = serde_json::from_str(&text).unwrap();
    assert!(recheck_archived_margins(&back).unwrap() <= 1e-12);
    assert_eq!(back.min_margin, cert.min_margin);
}

#[test]
fn verdict_is_positive_margin_and_full_return() {
    for spec in [
        HamiltonianSpec::QuadSaddle,
        HamiltonianSpec::blowup(1.0, 0.02),
    ] {
        let cert = certify_cone_contraction(&spec, &CertificateConfig::new(1.0, 100)).unwrap();
        assert_eq!(
            cert.verdict.passed(),
            cert.min_margin > 0.0 && cert.all_returned
        );
    }
}

#[test]
fn suspension_orbit_types() {
    let cfg = IntegratorConfig::default();
    let quad = suspend(&HamiltonianSpec::QuadSaddle).unwrap();
    let orbits = quad.closed_orbits(1.0, 1, &cfg).unwrap();
    assert_eq!(orbits.len(), 1);
    let class = orbits[0].class.unwrap();
    assert_eq!(class.kind, OrbitType::PositiveHyperbolic);
    let expect = 2.0 * (2.0 * std::f64::consts::PI).cosh();
    assert!((orbits[0].trace / expect - 1.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cones_are_two_opposite_sectors(
        r in 0.05..3.0f64,
        angle in 0.0..std::f64::consts::TAU,
        which in 0usize..3,
    ) {
        let field = [
            ConeField::Quadrant,
            ConeField::PolarLift { degree: 1.5 },
            ConeField::ConformalLift { degree: 1.5 },
        ][which];
        let p = Point2::polar(r, angle);
        let [b1, b2] = field.boundaries(p).unwrap();
        let cross = b1[0] * b2[1] - b1[1] * b2[0];
        prop_assert!(cross.abs() > 1e-9, "degenerate cone");
        let mid = [b1[0] + b2[0], b1[1] + b2[1]];
        let inside = field.contains(p, mid).unwrap();
        let flipped = field.contains(p, [-mid[0], -mid[1]]).unwrap();
        prop_assert_eq!(inside, flipped);
    }

    #[test]
    fn lefschetz_and_parity_follow_the_type(
        t in -3.0..3.0f64,
        angle in 0.0..std::f64::consts::TAU,
        flip in prop::bool::ANY,
    ) {
        let base = if t.abs() > 0.01 { Mat2::hyperbolic(t) } else { Mat2::rotation(angle) };
        let m = if flip { Mat2::new(-base.0[0][0], -base.0[0][1], -base.0[1][0], -base.0[1][1]) } else { base };
        if let Ok(c) = classify_linear_return(&m) {
            let positive = c.kind == OrbitType::PositiveHyperbolic;
            prop_assert_eq!(c.lefschetz == -1, positive);
            prop_assert_eq!(c.parity == 1, positive);
        }
    }

    #[test]
    fn classified_points_match_their_eigenvalues(
        sign in prop::bool::ANY,
        eps in 0.02..0.2f64,
    ) {
        let spec = HamiltonianSpec::blowup(if sign { 1.0 } else { -1.0 }, eps);
        let c = find_fixed_points(&spec, SearchBox::centered(2.0 * eps), 31).unwrap();
        for f in &c.points {
            prop_assert!(f.residual <= 1e-10);
            let again = classify_fixed_point(&spec, f.location).unwrap();
            prop_assert_eq!(again.kind, f.kind);
            let real = f.eigenvalues.iter().all(|e| e.1 == 0.0);
            match f.kind {
                FixedPointType::Hyperbolic => prop_assert!(real && f.hessian_det < 0.0),
                FixedPointType::Elliptic => prop_assert!(!real && f.hessian_det > 0.0),
                FixedPointType::Degenerate => {}
            }
        }
    }
}
