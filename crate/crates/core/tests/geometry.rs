use approx::assert_relative_eq;
use divpair::geometry::*;
use divpair::Vec2;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn unit_square() -> FinitePerimeterSet {
    FinitePerimeterSet::rectangle(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap()
}

fn cap_area(r: f64) -> f64 {
    (1.0 - r).acos() - (1.0 - r) * (2.0 * r - r * r).sqrt()
}

/// Sutherland–Hodgman clip of a polygon against `n·p > c`, then shoelace.
fn clipped_polygon_area(poly: &[Vec2], n: Vec2, c: f64) -> f64 {
    let mut out = Vec::new();
    let k = poly.len();
    for i in 0..k {
        let (a, b) = (poly[i], poly[(i + 1) % k]);
        let (fa, fb) = (n.dot(a) - c, n.dot(b) - c);
        if fa > 0.0 {
            out.push(a);
        }
        if (fa > 0.0) != (fb > 0.0) {
            out.push(a + (b - a) * (fa / (fa - fb)));
        }
    }
    if out.len() < 3 {
        0.0
    } else {
        signed_area(&out).abs()
    }
}

#[test]
fn half_plane_in_ball_is_half_disc() {
    let h = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    for r in [1.0, 0.1, 1e-3] {
        let d = clip(
            &h,
            &Probe::Ball {
                center: Vec2::ZERO,
                radius: r,
            },
        )
        .unwrap();
        assert_relative_eq!(d.area(), 0.5 * PI * r * r, max_relative = 1e-13);
    }
}

#[test]
fn disc_cap_in_thin_cylinder() {
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    for r in [0.1f64, 0.01, 1e-4] {
        let rho = (2.0 * r - r * r).sqrt() * 1.5;
        let probe = Probe::Cylinder {
            center: Vec2::new(1.0, 0.0),
            normal: Vec2::new(-1.0, 0.0),
            r,
            rho,
        };
        let d = clip(&disc, &probe).unwrap();
        assert!(
            (d.area() - cap_area(r)).abs() < 1e-14,
            "r={r}: {} vs {}",
            d.area(),
            cap_area(r)
        );
    }
}

#[test]
fn cylinder_alone_is_rectangle() {
    let big = FinitePerimeterSet::disc(Vec2::ZERO, 100.0).unwrap();
    let probe = Probe::Cylinder {
        center: Vec2::new(0.3, -0.2),
        normal: Vec2::polar(0.7),
        r: 0.05,
        rho: 0.4,
    };
    assert_relative_eq!(
        clip(&big, &probe).unwrap().area(),
        4.0 * 0.05 * 0.4,
        max_relative = 1e-13
    );
}

#[test]
fn empty_intersection_gives_empty_decomposition() {
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    let d = clip(
        &disc,
        &Probe::Ball {
            center: Vec2::new(5.0, 0.0),
            radius: 1.0,
        },
    )
    .unwrap();
    assert_eq!(d.area(), 0.0);
}

#[test]
fn degenerate_probe_and_deep_trees_are_rejected() {
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    let err = clip(
        &disc,
        &Probe::Ball {
            center: Vec2::ZERO,
            radius: 0.0,
        },
    )
    .unwrap_err();
    assert!(matches!(err, GeometryError::DegenerateProbe(_)));
    let mut deep = disc.clone();
    for _ in 0..9 {
        deep = FinitePerimeterSet::union(vec![deep]);
    }
    let err = clip(
        &deep,
        &Probe::Ball {
            center: Vec2::ZERO,
            radius: 1.0,
        },
    )
    .unwrap_err();
    assert!(matches!(
        err,
        GeometryError::UnsupportedBoolean { depth: 9, .. }
    ));
}

#[test]
fn perimeters_of_basic_sets() {
    assert_relative_eq!(
        perimeter(&unit_square(), None).unwrap(),
        4.0,
        max_relative = 1e-14
    );
    let disc = FinitePerimeterSet::disc(Vec2::new(0.2, 0.1), 1.7).unwrap();
    assert_relative_eq!(
        perimeter(&disc, None).unwrap(),
        2.0 * PI * 1.7,
        max_relative = 1e-14
    );
    let h = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    assert!(perimeter(&h, None).unwrap().is_infinite());
}

#[test]
fn perimeter_inside_a_window_is_an_arc() {
    // unit-circle points within 1/2 of (1, 0): 2 sin(θ/2) < 1/2
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    let w = Probe::Ball {
        center: Vec2::new(1.0, 0.0),
        radius: 0.5,
    };
    let expected = 4.0 * (0.25f64).asin();
    assert_relative_eq!(
        perimeter(&disc, Some(&w)).unwrap(),
        expected,
        max_relative = 1e-13
    );
}

#[test]
fn lens_perimeter_and_orientation() {
    let a = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    let b = FinitePerimeterSet::disc(Vec2::new(1.0, 0.0), 1.0).unwrap();
    let lens = FinitePerimeterSet::intersection(vec![a.clone(), b.clone()]);
    // each arc subtends 2π/3
    assert_relative_eq!(
        perimeter(&lens, None).unwrap(),
        4.0 * PI / 3.0,
        max_relative = 1e-13
    );
    let rb = reduced_boundary(&lens, None).unwrap();
    for p in &rb.pieces {
        let m = p.midpoint();
        assert!(lens.contains(m + p.normal(0.5) * 1e-6));
        assert!(!lens.contains(m - p.normal(0.5) * 1e-6));
    }
    let moon = FinitePerimeterSet::difference(a, b);
    assert_relative_eq!(
        perimeter(&moon, None).unwrap(),
        2.0 * PI,
        max_relative = 1e-13
    );
}

#[test]
fn shared_edges_cancel_in_unions() {
    let left = FinitePerimeterSet::rectangle(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap();
    let right = FinitePerimeterSet::rectangle(Vec2::new(1.0, 0.0), Vec2::new(2.0, 1.0)).unwrap();
    let u = FinitePerimeterSet::union(vec![left, right]);
    assert_relative_eq!(perimeter(&u, None).unwrap(), 6.0, max_relative = 1e-14);
}

#[test]
fn interior_normals() {
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    let n = interior_normal(&disc, Vec2::new(1.0, 0.0)).unwrap();
    assert!((n - Vec2::new(-1.0, 0.0)).norm() < 1e-14);
    let h = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    let n = interior_normal(&h, Vec2::new(3.0, 0.0)).unwrap();
    assert!((n - Vec2::E2).norm() < 1e-14);
    let n = interior_normal(&unit_square(), Vec2::new(0.5, 0.0)).unwrap();
    assert!((n - Vec2::E2).norm() < 1e-14);
    assert!(matches!(
        interior_normal(&unit_square(), Vec2::new(1.0, 1.0)),
        Err(GeometryError::CornerPoint { .. })
    ));
    assert!(matches!(
        interior_normal(&disc, Vec2::new(0.3, 0.0)),
        Err(GeometryError::NotOnBoundary { .. })
    ));
}

#[test]
fn point_classes() {
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    assert_eq!(
        classify_point(&disc, Vec2::new(0.5, 0.0)).unwrap(),
        PointClass::Interior
    );
    assert_eq!(
        classify_point(&disc, Vec2::new(1.5, 0.0)).unwrap(),
        PointClass::Exterior
    );
    let h = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    assert_eq!(
        classify_point(&h, Vec2::new(2.0, 0.0)).unwrap(),
        PointClass::MeasureBoundary
    );
    // the tip of a square sees a quarter
    assert_eq!(
        classify_point(&unit_square(), Vec2::ZERO).unwrap(),
        PointClass::MeasureBoundary
    );
}

#[test]
fn densities_on_simple_sets() {
    let radii: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k)).collect();
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 2.0).unwrap();
    let est = density_estimate(&disc, Vec2::new(0.1, 0.2), &radii).unwrap();
    assert!(est.densities.iter().all(|d| (d - 1.0).abs() < 1e-13));
    let h = FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap();
    let est = density_estimate(&h, Vec2::new(0.3, 0.0), &radii).unwrap();
    assert!(est.densities.iter().all(|d| (d - 0.5).abs() < 1e-13));
    assert!(matches!(
        density_estimate(&h, Vec2::ZERO, &[]),
        Err(GeometryError::EmptySchedule)
    ));
    assert!(density_estimate(&h, Vec2::ZERO, &[0.1, 0.2]).is_err());
}

#[test]
fn region_integration_matches_moments() {
    // ∫_{B_1} x² = π/4, over the half disc {x₂>0}: π/8
    let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
    let half = Probe::HalfBall {
        center: Vec2::ZERO,
        radius: 1.0,
        normal: Vec2::E2,
        side: Side::Interior,
    };
    let d = clip(&disc, &half).unwrap();
    let v = d.integrate(1e-13, |p| p.x * p.x).unwrap();
    assert!((v - PI / 8.0).abs() < 1e-12);
    let sq = unit_square();
    let d = decompose_auto(&sq, None).unwrap();
    let v = d.integrate(1e-13, |p| p.x * p.y * p.y).unwrap();
    assert!((v - 1.0 / 6.0).abs() < 1e-13);
}

#[test]
fn sets_round_trip_through_json() {
    let set = FinitePerimeterSet::difference(
        FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap(),
        FinitePerimeterSet::product(IntervalUnion::new(vec![(0.1, 0.2)]).unwrap(), Axis::X1),
    );
    let json = serde_json::to_string(&set).unwrap();
    let back: FinitePerimeterSet = serde_json::from_str(&json).unwrap();
    assert_eq!(back, set);
    let bad = r#"{"disc": {"center": [0, 0], "radius": -1}}"#;
    assert!(serde_json::from_str::<FinitePerimeterSet>(bad).is_err());
}

fn convex_polygon() -> impl Strategy<Value = Vec<Vec2>> {
    (
        3usize..8,
        prop::collection::vec(0.0f64..1.0, 8),
        0.3f64..2.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_map(|(n, jitter, rad, cx, cy)| {
            let mut angles: Vec<f64> = (0..n)
                .map(|k| (k as f64 + 0.8 * jitter[k]) * 2.0 * PI / n as f64)
                .collect();
            angles.sort_by(f64::total_cmp);
            angles
                .iter()
                .map(|a| Vec2::new(cx, cy) + Vec2::polar(*a) * rad)
                .collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_splits_into_two_half_balls(
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, r in 0.05f64..2.0, a in 0.0f64..TAU, b in 0.0f64..TAU,
    ) {
        let set = FinitePerimeterSet::union(vec![
            FinitePerimeterSet::disc(Vec2::new(0.3, 0.1), 0.9).unwrap(),
            FinitePerimeterSet::rectangle(Vec2::new(-1.0, -1.2), Vec2::new(0.2, 0.4)).unwrap(),
        ]);
        let x = Vec2::new(cx, cy);
        let nu = Vec2::polar(a);
        let whole = clip(&set, &Probe::Ball { center: x, radius: r }).unwrap().area();
        let hi = clip(&set, &Probe::HalfBall { center: x, radius: r, normal: nu, side: Side::Interior }).unwrap().area();
        let he = clip(&set, &Probe::HalfBall { center: x, radius: r, normal: nu, side: Side::Exterior }).unwrap().area();
        prop_assert!((whole - hi - he).abs() <= 1e-12 * whole.max(1e-300) + 1e-15);
        // same area from a Cartesian sweep
        let cart = clip_in_frame(&set, &Probe::Ball { center: x, radius: r }, Frame::across(x, Vec2::polar(b))).unwrap().area();
        prop_assert!((whole - cart).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn polygon_half_plane_areas_match_clipping_oracle(poly in convex_polygon(), a in 0.0f64..TAU, c in -1.0f64..1.0) {
        let n = Vec2::polar(a);
        let set = FinitePerimeterSet::intersection(vec![
            FinitePerimeterSet::polygon(poly.clone()).unwrap(),
            FinitePerimeterSet::half_plane(n, c).unwrap(),
        ]);
        let exact = clipped_polygon_area(&poly, n, c);
        let area = match decompose_auto(&set, None) {
            Ok(d) => d.area(),
            Err(GeometryError::UnboundedRegion) => 0.0,
            Err(e) => panic!("{e}"),
        };
        prop_assert!((area - exact).abs() <= 1e-12 * (1.0 + exact), "{} vs {}", area, exact);
    }

    #[test]
    fn disjoint_union_perimeter_adds(r1 in 0.1f64..1.0, r2 in 0.1f64..1.0, gap in 0.01f64..1.0, w in 0.1f64..2.0) {
        let a = FinitePerimeterSet::disc(Vec2::ZERO, r1).unwrap();
        let b = FinitePerimeterSet::rectangle(Vec2::new(r1 + gap, -0.5), Vec2::new(r1 + gap + w, r2)).unwrap();
        let pa = perimeter(&a, None).unwrap();
        let pb = perimeter(&b, None).unwrap();
        let pu = perimeter(&FinitePerimeterSet::union(vec![a, b]), None).unwrap();
        prop_assert!((pu - pa - pb).abs() <= 1e-12 * pu);
    }

    #[test]
    fn normals_are_unit_and_flip_under_complement(t in 0.0f64..TAU, r in 0.2f64..1.5) {
        let disc = FinitePerimeterSet::disc(Vec2::new(0.1, -0.2), r).unwrap();
        let x = Vec2::new(0.1, -0.2) + Vec2::polar(t) * r;
        let big = FinitePerimeterSet::rectangle(Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0)).unwrap();
        let comp = FinitePerimeterSet::difference(big, disc.clone());
        let n = interior_normal(&disc, x).unwrap();
        let m = interior_normal(&comp, x).unwrap();
        prop_assert!((n.norm() - 1.0).abs() < 1e-14);
        prop_assert!((n + m).norm() < 1e-14);
    }

    #[test]
    fn interior_points_have_unit_density(t in 0.0f64..TAU, s in 0.0f64..0.9) {
        let disc = FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap();
        let x = Vec2::polar(t) * s;
        prop_assert_eq!(classify_point(&disc, x).unwrap(), PointClass::Interior);
        let radii: Vec<f64> = (0..10).map(|k| 0.05 * 0.5f64.powi(k)).collect();
        let est = density_estimate(&disc, x, &radii).unwrap();
        prop_assert!((est.liminf - 1.0).abs() < 1e-9 && (est.limsup - 1.0).abs() < 1e-9);
    }
}
