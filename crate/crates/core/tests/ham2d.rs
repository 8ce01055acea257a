use proptest::prelude::*;

use shsverify::ham2d::{
    bump_profile, flow, flow_jacobian, flow_with_jacobian, return_map, BumpParams, HamiltonianSpec,
    IntegratorConfig, Mat2, Point2, SectionSpec,
};

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

#[test]
fn blowup_flow_stays_on_its_level_set() {
    let spec = HamiltonianSpec::blowup(1.0, 0.01);
    let p0 = Point2::new(0.5, 0.5);
    let p1 = flow(&spec, p0, 1.0, &cfg()).unwrap();
    let drift = (spec.value(p1).unwrap() - spec.value(p0).unwrap()).abs();
    assert!(drift <= 1e-10, "{drift}");
}

#[test]
fn jacobian_matches_central_differences() {
    let spec = HamiltonianSpec::blowup(-1.0, 0.05);
    let p0 = Point2::new(1.0, 0.0);
    let j = flow_jacobian(&spec, p0, 2.0, &cfg()).unwrap();
    assert!((j.det() - 1.0).abs() <= 1e-8);
    let h = 1e-6;
    let mut fd = [[0.0; 2]; 2];
    for (col, e) in [Point2::new(h, 0.0), Point2::new(0.0, h)]
        .into_iter()
        .enumerate()
    {
        let plus = flow(&spec, Point2::new(p0.x + e.x, p0.y + e.y), 2.0, &cfg()).unwrap();
        let minus = flow(&spec, Point2::new(p0.x - e.x, p0.y - e.y), 2.0, &cfg()).unwrap();
        fd[0][col] = (plus.x - minus.x) / (2.0 * h);
        fd[1][col] = (plus.y - minus.y) / (2.0 * h);
    }
    assert!(j.max_abs_diff(&Mat2(fd)) < 1e-6, "{j:?} vs {fd:?}");
}

#[test]
fn bump_is_a_on_the_inner_disk() {
    let b = bump_profile(BumpParams::new(1.1, 1.0), 1).unwrap();
    assert!((b.value(0.0, 0.0) - 1.1).abs() < 1e-15);
}

#[test]
fn quad_passage_is_symmetric() {
    let spec = HamiltonianSpec::QuadSaddle;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let start = Point2::polar(1.0, -std::f64::consts::FRAC_PI_4 + 0.05);
    let out = return_map(&spec, &SectionSpec::entering(1.0), start, &cfg()).unwrap();
    // Reflection in the x axis conjugates the flow to its inverse.
    assert!(out.exit.dist(Point2::new(start.x, -start.y)) < 1e-9);
    assert!(out.exit.dist(Point2::new(s, s)) < 0.1);
}

#[test]
fn blowup_returns_no_faster_than_the_linear_saddle() {
    let spec = HamiltonianSpec::blowup(1.0, 0.01);
    let quad = HamiltonianSpec::QuadSaddle;
    let section = SectionSpec::entering(1.0);
    let mut c = cfg();
    c.max_time = 120.0;
    let starts: Vec<Point2> = (0..50)
        .map(|i| {
            Point2::polar(
                1.0,
                -std::f64::consts::FRAC_PI_2 + 0.03 + 1.51 * i as f64 / 49.0,
            )
        })
        .collect();
    let fastest = starts
        .iter()
        .map(|&p| return_map(&quad, &section, p, &c).unwrap().time)
        .fold(f64::INFINITY, f64::min);
    for &p in &starts {
        let t = return_map(&spec, &section, p, &c).unwrap().time;
        assert!(t >= fastest, "{p:?}: {t} < {fastest}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quad_flow_is_the_matrix_exponential(
        x in -1.0..1.0f64,
        y in -1.0..1.0f64,
        t in 0.0..3.0f64,
    ) {
        let out = flow_with_jacobian(&HamiltonianSpec::QuadSaddle, Point2::new(x, y), t, &cfg()).unwrap();
        let m = Mat2::hyperbolic(t);
        let [ex, ey] = m.apply([x, y]);
        prop_assert!(out.point.dist(Point2::new(ex, ey)) <= 1e-8);
        prop_assert!(out.jacobian.max_abs_diff(&m) <= 1e-8);
    }

    #[test]
    fn blowup_flow_is_symplectic_and_conservative(
        sign in prop::bool::ANY,
        eps in 0.01..0.1f64,
        r in 0.0..2.0f64,
        angle in 0.0..std::f64::consts::TAU,
        t in 0.0..2.0f64,
    ) {
        let spec = HamiltonianSpec::blowup(if sign { 1.0 } else { -1.0 }, eps);
        let p0 = Point2::polar(r * eps, angle);
        let out = flow_with_jacobian(&spec, p0, t, &cfg()).unwrap();
        prop_assert!((out.jacobian.det() - 1.0).abs() <= 1e-6);
        prop_assert!(out.energy_drift <= 1e-8);
        prop_assert!(out.point.is_finite());
    }

    #[test]
    fn backward_flow_undoes_forward_flow(
        x in -0.2..0.2f64,
        y in -0.2..0.2f64,
        t in 0.0..1.5f64,
    ) {
        let spec = HamiltonianSpec::blowup(-1.0, 0.05);
        let p1 = flow(&spec, Point2::new(x, y), t, &cfg()).unwrap();
        let p0 = flow(&spec, p1, -t, &cfg()).unwrap();
        prop_assert!(p0.dist(Point2::new(x, y)) <= 1e-8);
    }
}
