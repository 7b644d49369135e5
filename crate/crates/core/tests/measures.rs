use approx::assert_abs_diff_eq;
use divpair::geometry::{Axis, CurvePiece, FinitePerimeterSet};
use divpair::measures::*;
use divpair::{Poly2, ScalarExpr, Vec2};
use proptest::prelude::*;
use std::f64::consts::PI;

fn disc(r: f64) -> FinitePerimeterSet {
    FinitePerimeterSet::disc(Vec2::ZERO, r).unwrap()
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> FinitePerimeterSet {
    FinitePerimeterSet::rectangle(Vec2::new(x0, y0), Vec2::new(x1, y1)).unwrap()
}

fn cantor_strip(lambda: f64, depth: u32) -> CantorLinePart {
    CantorLinePart {
        profile: CantorMeasure1D::new(lambda, depth),
        axis: Axis::X1,
        band: (0.0, 1.0),
        weight: ScalarExpr::constant(1.0),
        window: None,
    }
}

#[test]
fn lebesgue_mass_of_disc() {
    let m = MeasureRep::lebesgue(Some(disc(1.0)));
    assert_abs_diff_eq!(
        m.eval_on(&disc(2.0), DEFAULT_TOL).unwrap(),
        PI,
        epsilon = 1e-10
    );
    assert_abs_diff_eq!(
        m.eval_on(&disc(0.5), DEFAULT_TOL).unwrap(),
        PI / 4.0,
        epsilon = 1e-10
    );
}

#[test]
fn weakstar_gap_of_doubled_lebesgue() {
    let m = MeasureRep::lebesgue(Some(disc(1.0)));
    let suite = vec![TestFunction::cutoff(Vec2::ZERO, 1.0, 1.5)];
    let gap = weakstar_gap(&m, &m.scale(2.0), &suite, 1e-11).unwrap();
    assert_abs_diff_eq!(gap, PI / 2.0, epsilon = 1e-9);
}

#[test]
fn cantor_line_has_unit_mass_per_unit_band() {
    let m = MeasureRep::cantor(cantor_strip(1.0 / 3.0, 8));
    let v = m.eval_on(&rect(-1.0, -1.0, 2.0, 2.0), 1e-10).unwrap();
    assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    // the middle gap carries nothing
    let v = m.eval_on(&rect(0.4, -1.0, 0.6, 2.0), 1e-10).unwrap();
    assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
    // the left third carries half
    let v = m.eval_on(&rect(-1.0, -1.0, 0.5, 2.0), 1e-10).unwrap();
    assert_abs_diff_eq!(v, 0.5, epsilon = 1e-10);
}

#[test]
fn window_inside_a_strip_needs_more_depth() {
    let m = MeasureRep::cantor(cantor_strip(0.5, 3));
    let err = m.eval_on(&rect(-1.0, -1.0, 0.005, 2.0), 1e-10).unwrap_err();
    assert!(matches!(err, MeasureError::DepthInsufficient { .. }));
}

#[test]
fn curve_measure_and_pushforward() {
    let line = CurvePiece::Segment {
        a: Vec2::new(-3.0, 0.0),
        b: Vec2::new(3.0, 0.0),
    };
    let m = MeasureRep::on_curves(vec![line], CurveDensity::constant(2.0));
    assert_abs_diff_eq!(m.eval_on(&disc(1.0), 1e-12).unwrap(), 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        m.eval_on_curves(&[line], 1e-12).unwrap(),
        12.0,
        epsilon = 1e-12
    );
    // r^{-1} Φ_{x,r#}: a flat line is invariant
    let x = Vec2::new(0.7, 0.0);
    for r in [0.5, 0.1, 0.01] {
        let b = m.pushforward_homothety(x, r, 1.0);
        assert_abs_diff_eq!(b.eval_on(&disc(2.0), 1e-12).unwrap(), 4.0, epsilon = 1e-11);
    }
}

#[test]
fn pushforward_of_lebesgue_scales_by_r_squared() {
    let m = MeasureRep::lebesgue(Some(disc(1.0)));
    let b = m.pushforward_homothety(Vec2::new(0.2, 0.1), 0.25, 0.0);
    // everything inside B_{1/4}(x) ⊂ B_1 maps onto the unit disc, mass π/16
    assert_abs_diff_eq!(
        b.eval_on(&disc(2.0), 1e-12).unwrap(),
        PI / 16.0,
        epsilon = 1e-11
    );
    let b = m.pushforward_homothety(Vec2::new(0.2, 0.1), 0.25, 2.0);
    assert_abs_diff_eq!(b.eval_on(&disc(2.0), 1e-12).unwrap(), PI, epsilon = 1e-10);
}

#[test]
fn total_variation_cancels_overlaps() {
    let m = MeasureRep::lebesgue(Some(disc(1.0)))
        .add(MeasureRep::lebesgue(Some(disc(0.5))).scale(-1.0));
    assert_abs_diff_eq!(
        m.eval_on(&disc(2.0), 1e-11).unwrap(),
        0.75 * PI,
        epsilon = 1e-10
    );
    assert_abs_diff_eq!(
        m.total_variation(&disc(2.0), 1e-11).unwrap(),
        0.75 * PI,
        epsilon = 1e-10
    );
    let m = MeasureRep::lebesgue(Some(disc(1.0)))
        .add(MeasureRep::lebesgue(Some(disc(0.5))).scale(-2.0));
    assert_abs_diff_eq!(
        m.total_variation(&disc(2.0), 1e-11).unwrap(),
        PI,
        epsilon = 1e-10
    );
}

#[test]
fn pairing_with_polynomial_density() {
    // ∫_{B_1} x² dx = π/4
    let m = MeasureRep::absolutely_continuous(
        ScalarExpr::Poly(Poly2::from_terms(&[(2, 0, 1.0)])),
        Some(disc(1.0)),
    );
    let phi = TestFunction::cutoff(Vec2::ZERO, 1.5, 2.0);
    assert_abs_diff_eq!(m.pair_test(&phi, 1e-12).unwrap(), PI / 4.0, epsilon = 1e-11);
}

#[test]
fn restriction_matches_evaluation() {
    let m = MeasureRep::lebesgue(Some(disc(1.0)));
    let half = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    let r = m.restrict(&half);
    assert_abs_diff_eq!(
        r.eval_on(&disc(3.0), 1e-12).unwrap(),
        PI / 2.0,
        epsilon = 1e-11
    );
    assert_abs_diff_eq!(m.eval_on(&half, 1e-12).unwrap(), PI / 2.0, epsilon = 1e-11);
}

#[test]
fn measure_json_round_trip() {
    let m = MeasureRep::cantor(cantor_strip(0.5, 4)).add(MeasureRep::lebesgue(Some(disc(1.0))));
    let s = serde_json::to_string(&m).unwrap();
    let back: MeasureRep = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairing_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, cx in -0.5f64..0.5, cy in -0.5f64..0.5) {
        let m1 = MeasureRep::lebesgue(Some(disc(1.0)));
        let m2 = MeasureRep::on_curves(
            vec![CurvePiece::Segment { a: Vec2::new(-2.0, 0.1), b: Vec2::new(2.0, 0.1) }],
            CurveDensity::constant(1.0),
        );
        let phi = TestFunction::mollifier(Vec2::new(cx, cy), 0.3, 3);
        let lhs = m1.scale(a).add(m2.scale(b)).pair_test(&phi, 1e-12).unwrap();
        let rhs = a * m1.pair_test(&phi, 1e-12).unwrap() + b * m2.pair_test(&phi, 1e-12).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn restriction_is_consistent(c in -0.9f64..0.9) {
        // μ⌊E(B) = μ(E ∩ B)
        let m = MeasureRep::lebesgue(Some(disc(1.0)));
        let e = FinitePerimeterSet::half_plane(Vec2::E1, c).unwrap();
        let b = disc(0.8);
        let lhs = m.restrict(&e).eval_on(&b, 1e-12).unwrap();
        let rhs = m.eval_on(&FinitePerimeterSet::intersection(vec![e, b]), 1e-12).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }
}
