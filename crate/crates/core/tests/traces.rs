use approx::assert_abs_diff_eq;
use divpair::cantorlab::field_from_construction;
use divpair::geometry::{CurvePiece, FinitePerimeterSet, Rect, Side};
use divpair::scenes::{DMField, JumpTerm};
use divpair::traces::*;
use divpair::{Poly2, Vec2, VecPoly};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn disc_field(a: Vec2) -> DMField {
    let d = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    DMField::new(VecPoly::zero(), vec![JumpTerm::constant(a, d)]).unwrap()
}

fn upper_field(a: Vec2) -> DMField {
    let h = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    DMField::new(VecPoly::zero(), vec![JumpTerm::constant(a, h)]).unwrap()
}

fn constant_field(a: Vec2) -> DMField {
    DMField::smooth_field(VecPoly::constant(a))
}

fn poly_field() -> DMField {
    DMField::smooth_field(VecPoly::new(
        Poly2::from_terms(&[(0, 0, 0.3), (1, 0, 1.0), (1, 1, -0.5)]),
        Poly2::from_terms(&[(0, 0, -0.2), (0, 2, 0.7), (2, 0, 0.4)]),
    ))
}

#[test]
fn constant_field_halfball_average_is_exact() {
    let a = Vec2::new(0.8, -1.3);
    let f = constant_field(a);
    let nu = Vec2::polar(0.7);
    for r in [1.0, 0.1, 1e-3, 1e-6] {
        let i = halfball_average(&f, Vec2::new(0.2, 0.1), nu, r, Side::Interior).unwrap();
        let e = halfball_average(&f, Vec2::new(0.2, 0.1), nu, r, Side::Exterior).unwrap();
        assert!((i - a.dot(nu)).abs() <= 1e-12, "{}", i - a.dot(nu));
        assert!((e + a.dot(nu)).abs() <= 1e-12);
    }
}

#[test]
fn halfball_exterior_of_disc_vanishes() {
    let f = disc_field(Vec2::new(0.4, 1.0));
    let x = Vec2::new(1.0, 0.0);
    for r in [0.1, 0.01] {
        let v = halfball_average(&f, x, -x, r, Side::Exterior).unwrap();
        assert!(v.abs() <= r, "{v}");
    }
}

#[test]
fn hyperplane_jump_traces() {
    let a = Vec2::new(0.5, 2.0);
    let f = upper_field(a);
    let t = halfball_traces(&f, Vec2::ZERO, Vec2::E2, &RadiusSchedule::default()).unwrap();
    assert_abs_diff_eq!(t.plus.value, a.y, epsilon = 1e-6);
    assert_abs_diff_eq!(t.minus.value, 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(t.star, 0.5 * a.y, epsilon = 1e-6);
}

#[test]
fn disc_boundary_traces_match_the_closed_form() {
    let a = Vec2::new(0.0, 1.0);
    let f = disc_field(a);
    for k in 0..8 {
        let th = 2.0 * PI * (k as f64 + 0.3) / 8.0;
        let x = Vec2::polar(th);
        let nu = -x;
        let t = halfball_traces(&f, x, nu, &RadiusSchedule::default()).unwrap();
        assert_abs_diff_eq!(t.plus.value, a.dot(nu), epsilon = 1e-5);
        assert_abs_diff_eq!(t.minus.value, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t.star, 0.5 * a.dot(nu), epsilon = 1e-5);
    }
}

#[test]
fn smooth_field_traces_equal_point_values() {
    let f = poly_field();
    for (x, nu) in [
        (Vec2::new(0.3, -0.2), Vec2::polar(1.1)),
        (Vec2::new(-0.5, 0.4), Vec2::E1),
    ] {
        let want = f.eval(x).dot(nu);
        let t = halfball_traces(&f, x, nu, &RadiusSchedule::default()).unwrap();
        assert_abs_diff_eq!(t.plus.value, want, epsilon = 1e-6);
        assert_abs_diff_eq!(t.minus.value, want, epsilon = 1e-6);
        let c = cyl_trace(&f, x, nu, &CylinderSchedule::default()).unwrap();
        assert!(c.converged);
        assert_abs_diff_eq!(c.value, want, epsilon = 1e-4);
    }
}

#[test]
fn cylinder_averages_reproduce_the_cap_integral() {
    let a = Vec2::new(0.0, 1.0);
    let f = disc_field(a);
    let x = Vec2::polar(-FRAC_PI_2);
    let zeta = -x;
    let rho = 1.0;
    for r in [0.1f64, 0.01] {
        let cap = (1.0 - r).acos() - (1.0 - r) * (2.0 * r - r * r).sqrt();
        let got = cyl_average(&f, x, zeta, r, rho).unwrap() * 4.0 * r * rho;
        assert!((got - cap * a.dot(zeta)).abs() <= 1e-10, "{}", got - cap);
    }
}

#[test]
fn cylinder_trace_vanishes_on_the_disc_boundary() {
    let f = disc_field(Vec2::new(0.0, 1.0));
    let x = Vec2::polar(-1.2);
    let c = cyl_trace(&f, x, -x, &CylinderSchedule::default()).unwrap();
    assert!(c.value.abs() <= 1e-3, "{}", c.value);
    let inner = cyl_inner_limits(&f, x, -x, &CylinderSchedule::default()).unwrap();
    for (_, e) in &inner {
        assert!((e.order - 0.5).abs() < 0.05, "{}", e.order);
    }
}

#[test]
fn cylinder_average_across_flat_jump_is_half() {
    let a = Vec2::new(0.3, 1.5);
    let f = upper_field(a);
    for (r, rho) in [(0.1, 0.4), (1e-4, 0.02)] {
        assert_abs_diff_eq!(
            cyl_average(&f, Vec2::ZERO, Vec2::E2, r, rho).unwrap(),
            0.75,
            epsilon = 1e-12
        );
    }
    assert_abs_diff_eq!(
        cyl_trace(
            &constant_field(a),
            Vec2::new(0.1, 0.2),
            Vec2::E1,
            &CylinderSchedule::default()
        )
        .unwrap()
        .value,
        0.3,
        epsilon = 1e-9
    );
}

#[test]
fn trace_jump_identity_on_basic_scenes() {
    let s = RadiusSchedule::default();
    let a = Vec2::new(0.6, 1.2);
    let axis = CurvePiece::Segment {
        a: Vec2::new(-0.5, 0.0),
        b: Vec2::new(0.5, 0.0),
    };
    let c = trace_jump_check(&upper_field(a), &[axis], &s).unwrap();
    assert_abs_diff_eq!(c.lhs, a.y, epsilon = 1e-12);
    assert!(c.residual <= 1e-6, "{c:?}");

    let c = trace_jump_check(&poly_field(), &[axis], &s).unwrap();
    assert!(c.lhs.abs() <= 1e-6 && c.rhs.abs() <= 1e-6);

    // quarter circle oriented with the interior on its left: ∫ a·(−x) dℋ¹
    let quarter = CurvePiece::Arc {
        center: Vec2::ZERO,
        radius: 1.0,
        start: 0.0,
        sweep: FRAC_PI_2,
    };
    let c = trace_jump_check(&disc_field(a), &[quarter], &s).unwrap();
    assert_abs_diff_eq!(c.lhs, -(a.x + a.y), epsilon = 1e-10);
    assert!(c.residual <= 1e-5, "{c:?}");
}

#[test]
fn hyperplane_identity() {
    let s = RadiusSchedule::default();
    let a = Vec2::new(0.2, -0.9);
    let c = hyperplane_average_identity(&constant_field(a), Vec2::ZERO, Vec2::E2, 0.5, &s).unwrap();
    assert_abs_diff_eq!(c.lhs, 2.0 * 0.5 * a.y, epsilon = 1e-10);
    assert_abs_diff_eq!(c.rhs, 2.0 * 0.5 * a.y, epsilon = 1e-10);

    let c = hyperplane_average_identity(&upper_field(a), Vec2::ZERO, Vec2::E2, 0.5, &s).unwrap();
    assert_abs_diff_eq!(c.lhs, a.y, epsilon = 1e-6);
    assert_abs_diff_eq!(c.rhs, a.y, epsilon = 1e-6);

    let c = hyperplane_average_identity(
        &poly_field(),
        Vec2::new(0.1, 0.2),
        Vec2::polar(0.4),
        0.3,
        &s,
    )
    .unwrap();
    assert!(c.residual <= 1e-6, "{c:?}");
}

#[test]
fn cantor_field_has_no_trace_jump_across_vertical_lines() {
    let f = field_from_construction(2).unwrap();
    for x1 in [2.3, 2.75] {
        let t = halfball_traces(
            &f,
            Vec2::new(x1, 0.0),
            Vec2::E1,
            &RadiusSchedule::new(0.01, 0.5, 8).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(t.plus.value, t.minus.value, epsilon = 1e-9);
    }
}

#[test]
fn traces_agree_with_cylinders_off_the_jump_set() {
    // tangential jump only: Θ_A is empty
    let f = upper_field(Vec2::new(1.0, 0.0));
    assert!(f.jump_set().is_empty());
    for x in [Vec2::new(0.1, 0.0), Vec2::new(-0.3, 0.0)] {
        let t = halfball_traces(&f, x, Vec2::E2, &RadiusSchedule::default()).unwrap();
        let c = cyl_trace(&f, x, Vec2::E2, &CylinderSchedule::default()).unwrap();
        assert!((t.plus.value - t.minus.value).abs() <= 1e-4);
        assert!((c.value - t.plus.value).abs() <= 1e-4);
    }
    let f = poly_field();
    let x = Vec2::polar(0.5);
    let t = halfball_traces(&f, x, -x, &RadiusSchedule::default()).unwrap();
    let c = cyl_trace(&f, x, -x, &CylinderSchedule::default()).unwrap();
    assert!((c.value - t.plus.value).abs() <= 1e-4);
}

#[test]
fn curve_and_tangent_averages_approach_each_other() {
    let f = poly_field();
    let circle = CurvePiece::Arc {
        center: Vec2::ZERO,
        radius: 1.0,
        start: 0.0,
        sweep: 2.0 * PI,
    };
    let rhos = RadiusSchedule::new(0.4, 0.5, 6).unwrap();
    let gaps = tangent_gap_sequence(
        &f,
        &circle,
        0.1,
        Side::Interior,
        &rhos,
        &RadiusSchedule::default(),
    )
    .unwrap();
    let finest: Vec<f64> = gaps[gaps.len() / 2..].iter().map(|g| g.1).collect();
    assert!(finest.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(*finest.last().unwrap() < 0.05);
}

#[test]
fn schedules_reject_bad_parameters() {
    assert!(RadiusSchedule::new(0.1, 1.0, 10).is_err());
    assert!(RadiusSchedule::new(0.1, 0.5, 3).is_err());
    assert!(RadiusSchedule::new(1e-9, 0.1, 10).is_err());
    let mut c = CylinderSchedule::default();
    c.rho.count = 30;
    assert!(c.validate().is_err());
}

fn sup(f: &DMField) -> f64 {
    f.sup_norm(&Rect::around(Vec2::ZERO, 2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn converged_traces_are_bounded(th in 0.0..2.0 * PI, ax in -2.0..2.0f64, ay in -2.0..2.0f64) {
        let f = disc_field(Vec2::new(ax, ay));
        let x = Vec2::polar(th);
        let t = halfball_estimates(&f, x, -x, &RadiusSchedule::default()).unwrap();
        let bound = sup(&f) + 1e-6;
        for e in [&t.plus, &t.minus] {
            if e.converged {
                prop_assert!(e.value.abs() <= bound);
            }
        }
    }

    #[test]
    fn flipping_the_orientation_swaps_and_negates(th in 0.0..2.0 * PI, phi in 0.0..2.0 * PI) {
        let f = disc_field(Vec2::new(0.7, -0.4)).add(&poly_field()).unwrap();
        let x = Vec2::polar(th);
        let nu = Vec2::polar(phi);
        let s = RadiusSchedule::default();
        let p = halfball_estimates(&f, x, nu, &s).unwrap();
        let m = halfball_estimates(&f, x, -nu, &s).unwrap();
        prop_assert!((m.plus.value + p.minus.value).abs() <= 1e-9);
        prop_assert!((m.minus.value + p.plus.value).abs() <= 1e-9);
        prop_assert!((m.star + p.star).abs() <= 1e-9);
    }

    #[test]
    fn averages_are_linear(s in -3.0..3.0f64, th in 0.0..2.0 * PI, r in 0.01..0.5f64) {
        let f = disc_field(Vec2::new(0.3, 1.0));
        let g = poly_field();
        let h = f.scale(s).unwrap().add(&g).unwrap();
        let x = Vec2::polar(th);
        let nu = -x;
        for side in [Side::Interior, Side::Exterior] {
            let lhs = halfball_average(&h, x, nu, r, side).unwrap();
            let rhs = s * halfball_average(&f, x, nu, r, side).unwrap() + halfball_average(&g, x, nu, r, side).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
        let lhs = cyl_average(&h, x, nu, r * r, r).unwrap();
        let rhs = s * cyl_average(&f, x, nu, r * r, r).unwrap() + cyl_average(&g, x, nu, r * r, r).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
