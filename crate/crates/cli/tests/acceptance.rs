//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with the
//! measured worst case, its pinned tolerance and the wall time.

use divpair::cantorlab::{field_from_construction, CantorConstruction};
use divpair::geometry::{Axis, CurvePiece, FinitePerimeterSet};
use divpair::measures::{default_suite, MeasureRep, TestFunction};
use divpair::pairing::*;
use divpair::scenes::{BVFunction, BVSpec, DMField, JumpTerm};
use divpair::traces::*;
use divpair::{Poly2, Vec2, VecPoly};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const TOL: f64 = 1e-10;

fn disc(c: Vec2, r: f64) -> FinitePerimeterSet {
    FinitePerimeterSet::disc(c, r).unwrap()
}

fn rect(a: (f64, f64), b: (f64, f64)) -> FinitePerimeterSet {
    FinitePerimeterSet::rectangle(Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)).unwrap()
}

fn upper() -> FinitePerimeterSet {
    FinitePerimeterSet::half_plane(Vec2::E2, 0.0).unwrap()
}

fn half_disc() -> FinitePerimeterSet {
    FinitePerimeterSet::intersection(vec![disc(Vec2::ZERO, 1.0), upper()])
}

fn disc_field(a: Vec2) -> DMField {
    DMField::new(
        VecPoly::zero(),
        vec![JumpTerm::constant(a, disc(Vec2::ZERO, 1.0))],
    )
    .unwrap()
}

fn upper_field(a: Vec2) -> DMField {
    DMField::new(VecPoly::zero(), vec![JumpTerm::constant(a, upper())]).unwrap()
}

fn double_jump_field(a: Vec2, b: Vec2) -> DMField {
    let down = FinitePerimeterSet::half_plane(-Vec2::E2, 0.0).unwrap();
    DMField::new(
        VecPoly::zero(),
        vec![JumpTerm::constant(a, upper()), JumpTerm::constant(b, down)],
    )
    .unwrap()
}

fn poly_field() -> DMField {
    DMField::smooth_field(VecPoly::new(
        Poly2::from_terms(&[(0, 0, 0.3), (2, 0, 1.0), (1, 1, -0.5)]),
        Poly2::from_terms(&[(0, 0, -0.2), (0, 2, 0.7), (1, 0, 0.4)]),
    ))
}

/// Smooth part plus a constant jump across the unit circle.
fn jump_field() -> DMField {
    DMField::new(
        VecPoly::new(
            Poly2::from_terms(&[(0, 1, 0.5)]),
            Poly2::from_terms(&[(1, 0, -0.3), (0, 0, 0.2)]),
        ),
        vec![JumpTerm::constant(
            Vec2::new(0.4, 1.0),
            disc(Vec2::ZERO, 1.0),
        )],
    )
    .unwrap()
}

/// A jump across the boundary of a square whose size varies along it.
fn modulated_square_field() -> DMField {
    DMField::new(
        VecPoly::constant(Vec2::new(0.1, -0.2)),
        vec![JumpTerm {
            coefficient: Vec2::new(0.6, 0.8),
            region: rect((-0.5, -0.5), (0.5, 0.5)),
            modulation: Poly2::from_terms(&[(0, 0, 1.0), (1, 0, 0.5), (0, 1, -0.25)]),
        }],
    )
    .unwrap()
}

fn one_on(set: FinitePerimeterSet) -> BVFunction {
    BVFunction::polynomial_on(set, Poly2::constant(1.0)).unwrap()
}

fn affine_on_unit_disc() -> BVFunction {
    BVFunction::polynomial_on(
        disc(Vec2::ZERO, 1.0),
        Poly2::from_terms(&[(0, 0, 1.0), (1, 0, 0.5)]),
    )
    .unwrap()
}

fn example_points() -> Vec<Vec2> {
    (0..8)
        .map(|k| Vec2::polar(2.0 * PI * (k as f64 + 0.3) / 8.0))
        .collect()
}

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

/// Worst value of a set of `(measured, tolerance)` pairs, as `measured / tolerance`.
#[derive(Default)]
struct Worst {
    ratio: f64,
    measured: f64,
    tol: f64,
    label: String,
    failed: bool,
}

impl Worst {
    fn check(&mut self, label: &str, measured: f64, tol: f64) {
        let ok = measured <= tol;
        // once something failed, only later failures replace it
        if self.failed && ok {
            return;
        }
        let ratio = if ok { measured / tol } else { f64::INFINITY };
        if !ok || ratio >= self.ratio {
            *self = Worst {
                ratio,
                measured,
                tol,
                label: label.to_string(),
                failed: self.failed,
            };
        }
        self.failed |= !ok;
    }

    fn require(&mut self, label: &str, ok: bool) {
        if !ok {
            self.failed = true;
            self.label = label.to_string();
            self.measured = f64::NAN;
        }
    }

    fn summary(&self) -> String {
        format!(
            "worst {} = {:.3e} (tol {:.0e})",
            self.label, self.measured, self.tol
        )
    }
}

fn with_worst(f: impl FnOnce(&mut Worst)) -> Verdict {
    let mut w = Worst::default();
    f(&mut w);
    Verdict::new(!w.failed, w.summary())
}

fn example_scene() -> Verdict {
    let a = Vec2::new(0.0, 1.0);
    let f = disc_field(a);
    let u = BVFunction::characteristic(disc(Vec2::ZERO, 1.0)).unwrap();
    let s = TraceSettings::default();
    with_worst(|w| {
        for x in example_points() {
            let nu = -x;
            let hb = theta_density(&f, &u, x, TraceMethod::Halfball, 0.5, &s).unwrap();
            w.check(
                "|θ_halfball − a·ν/2|",
                (hb.value - 0.5 * a.dot(nu)).abs(),
                1e-4,
            );
            let cyl = cyl_trace(&f, x, nu, &s.cylinder).unwrap();
            w.require("cylinder converged", cyl.converged);
            w.check("|Cyl|", cyl.value.abs(), 1e-3);
            let rho = 0.5;
            for r in [0.1f64, 0.01] {
                let cap = (1.0 - r).acos() - (1.0 - r) * (2.0 * r - r * r).sqrt();
                let got = cyl_average(&f, x, nu, r, rho).unwrap() * 4.0 * r * rho;
                w.check("cylinder integral", (got - cap * a.dot(nu)).abs(), 1e-10);
            }
        }
    })
}

fn constant_and_hyperplane() -> Verdict {
    let a = Vec2::new(0.7, -1.3);
    let constant = DMField::smooth_field(VecPoly::constant(a));
    let hyper = upper_field(a);
    let s = RadiusSchedule::default();
    with_worst(|w| {
        for k in 0..6 {
            let x = Vec2::new(0.37 * k as f64 - 1.0, 0.2 * k as f64);
            let nu = Vec2::polar(1.1 * k as f64);
            let t = halfball_estimates(&constant, x, nu, &s).unwrap();
            for &(_, v) in t.plus.samples.iter().chain(&t.minus.samples) {
                w.check("constant half-ball average", (v - a.dot(nu)).abs(), 1e-12);
            }
        }
        for x1 in [-1.3, -0.2, 0.0, 0.45, 2.0] {
            let t = halfball_traces(&hyper, Vec2::new(x1, 0.0), Vec2::E2, &s).unwrap();
            w.check("|Tr⁺ − a·e₂|", (t.plus.value - a.y).abs(), 1e-6);
            w.check("|Tr⁻|", t.minus.value.abs(), 1e-6);
        }
    })
}

fn trace_jump_identity() -> Verdict {
    let s = RadiusSchedule::default();
    let circle = |f: &DMField| f.jump_set().to_vec();
    let scenes: Vec<(&str, DMField, Vec<CurvePiece>)> = {
        let d = disc_field(Vec2::new(0.0, 1.0));
        let j = jump_field();
        let m = modulated_square_field();
        let h = upper_field(Vec2::new(0.3, 1.7));
        let dj = double_jump_field(Vec2::new(0.3, 1.7), Vec2::new(-0.2, -0.6));
        let seg = vec![CurvePiece::Segment {
            a: Vec2::new(-1.0, 0.0),
            b: Vec2::new(1.5, 0.0),
        }];
        vec![
            ("disc", d.clone(), circle(&d)),
            ("disc+poly", j.clone(), circle(&j)),
            ("modulated square", m.clone(), circle(&m)),
            ("hyperplane", h, seg.clone()),
            ("double jump", dj, seg),
        ]
    };
    with_worst(|w| {
        for (name, f, sigma) in &scenes {
            let c = trace_jump_check(f, sigma, &s).unwrap();
            w.check(&format!("{name} residual"), c.residual, 1e-5);
        }
    })
}

fn gauss_green_ledgers() -> Verdict {
    let s = TraceSettings::default();
    let square_u = BVFunction::polynomial_on(
        disc(Vec2::ZERO, 5.0),
        Poly2::from_terms(&[(0, 0, 0.5), (1, 0, 0.8), (0, 1, -0.4)]),
    )
    .unwrap();
    let cases: Vec<(&str, DMField, BVFunction, FinitePerimeterSet)> = vec![
        (
            "disc",
            jump_field(),
            affine_on_unit_disc(),
            disc(Vec2::ZERO, 1.0),
        ),
        (
            "square",
            poly_field(),
            square_u,
            rect((0.0, 0.0), (1.0, 1.0)),
        ),
        (
            "half-disc",
            jump_field(),
            affine_on_unit_disc(),
            half_disc(),
        ),
    ];
    with_worst(|w| {
        for (name, f, u, e) in &cases {
            for variant in [GaussGreenVariant::Interior, GaussGreenVariant::Closure] {
                for (m, tol) in [(TraceMethod::Analytic, 1e-6), (TraceMethod::Halfball, 1e-4)] {
                    let l = gauss_green(f, u, e, variant, m, &s, TOL).unwrap();
                    w.check(&format!("{name} {variant:?} {m:?}"), l.residual, tol);
                }
            }
        }
    })
}

fn coarea() -> Verdict {
    let e1 = DMField::smooth_field(VecPoly::constant(Vec2::E1));
    let tilted = BVFunction::polynomial_on(
        disc(Vec2::new(0.3, 0.0), 1.2),
        Poly2::from_terms(&[(0, 0, 0.5), (1, 0, 0.8), (0, 1, -0.4)]),
    )
    .unwrap();
    let affine = BVFunction::polynomial_on(rect((0.0, 0.0), (1.0, 1.0)), Poly2::x()).unwrap();
    with_worst(|w| {
        for (name, f, u, b) in [
            (
                "affine on square",
                &e1,
                &affine,
                rect((0.0, 0.0), (1.0, 1.0)),
            ),
            (
                "field jump",
                &jump_field(),
                &tilted,
                rect((-1.5, -1.5), (1.6, 1.4)),
            ),
            (
                "polynomial field",
                &poly_field(),
                &tilted,
                disc(Vec2::ZERO, 0.9),
            ),
        ] {
            let c = coarea_pairing_check(f, u, &b, TOL).unwrap();
            w.check(name, c.residual, 1e-9);
        }
        let stair = BVFunction::staircase(0.5, 12, Axis::X1).unwrap();
        let c = coarea_pairing_check(&e1, &stair, &rect((0.0, 0.0), (1.0, 1.0)), 1e-9).unwrap();
        w.require("2¹² staircase levels", c.levels.len() == 1 << 12);
        w.check("staircase depth 12", c.residual, 1e-3);
    })
}

fn pairing_methods() -> Verdict {
    let settings = TraceSettings::default();
    let example = (
        disc_field(Vec2::new(0.0, 1.0)),
        BVFunction::characteristic(disc(Vec2::ZERO, 1.0)).unwrap(),
        None,
    );
    let jump = (jump_field(), affine_on_unit_disc(), None);
    let poly = (
        poly_field(),
        BVFunction::polynomial_on(
            disc(Vec2::ZERO, 5.0),
            Poly2::from_terms(&[(1, 0, 1.0), (1, 1, 2.0)]),
        )
        .unwrap(),
        Some(disc(Vec2::ZERO, 2.0)),
    );
    let moll = |x: f64, y: f64, r: f64| TestFunction::mollifier(Vec2::new(x, y), r, 3);
    let cases = [
        (
            "example",
            &example,
            vec![
                moll(0.3, -0.8, 0.5),
                moll(-0.9, 0.2, 0.4),
                moll(0.0, 0.0, 1.2),
            ],
        ),
        (
            "jump",
            &jump,
            vec![
                moll(0.7, 0.7, 0.5),
                moll(-0.2, -0.9, 0.3),
                TestFunction::cutoff(Vec2::ZERO, 0.5, 1.5),
            ],
        ),
        (
            "polynomial",
            &poly,
            vec![
                moll(-0.3, 0.4, 0.6),
                moll(0.5, 0.1, 0.3),
                moll(0.0, -0.5, 0.8),
            ],
        ),
    ];
    with_worst(|w| {
        for (name, (f, u, dom), tests) in cases {
            let r =
                pairing_result(f, u, dom.as_ref(), 0.5, &tests, &[], &[], &settings, TOL).unwrap();
            for c in &r.comparisons {
                w.check(
                    &format!("{name} distributional − analytic"),
                    c.difference,
                    1e-5,
                );
            }
        }
        let stair = BVFunction::new(BVSpec::Staircase {
            lambda: 0.5,
            depth: 8,
            axis: Axis::X1,
            origin: 0.0,
            scale: 0.01,
        })
        .unwrap();
        let bump = TestFunction::PolynomialBump {
            poly: Poly2::constant(2.0 / 3.0),
            center: Vec2::new(0.005, 0.0),
            inner: 0.5,
            outer: 1.0,
        };
        let e1 = DMField::smooth_field(VecPoly::constant(Vec2::E1));
        let dom = rect((-2.0, -2.0), (2.0, 2.0));
        let r = pairing_result(
            &e1,
            &stair,
            Some(&dom),
            0.5,
            &[bump],
            &[],
            &[],
            &settings,
            1e-9,
        )
        .unwrap();
        let c = &r.comparisons[0];
        w.check("Cantor distributional − analytic", c.difference, 1e-5);
        w.check("|Cantor analytic − 1|", (c.analytic - 1.0).abs(), 1e-3);
        w.check(
            "|Cantor distributional − 1|",
            (c.distributional - 1.0).abs(),
            1e-3,
        );
    })
}

fn lambda_collinearity() -> Verdict {
    let s = TraceSettings::default();
    let pairs = [
        (Vec2::new(0.3, 1.7), Vec2::new(-0.2, -0.6)),
        (Vec2::new(-1.0, 0.5), Vec2::new(2.0, 1.5)),
        (Vec2::new(0.0, -2.0), Vec2::new(0.4, 0.0)),
    ];
    let u = one_on(upper());
    with_worst(|w| {
        for (a, b) in pairs {
            let f = double_jump_field(a, b);
            for x1 in [-0.7, 0.4] {
                let x = Vec2::new(x1, 0.0);
                for m in [TraceMethod::Analytic, TraceMethod::Halfball] {
                    let th = |l: f64| theta_density(&f, &u, x, m, l, &s).unwrap().value;
                    let (t0, t1) = (th(0.0), th(1.0));
                    for l in [-0.5, 0.1, 0.3, 0.5, 0.9, 1.7] {
                        w.check(
                            "θ_λ off the line",
                            (th(l) - ((1.0 - l) * t0 + l * t1)).abs(),
                            1e-9,
                        );
                    }
                }
                let star = halfball_traces(&f, x, Vec2::E2, &s.halfball).unwrap().star;
                let half = theta_density(&f, &u, x, TraceMethod::Halfball, 0.5, &s)
                    .unwrap()
                    .value;
                w.check("|θ_½ − Tr*|", (half - star).abs(), 1e-9);
            }
        }
    })
}

fn cantor_sets() -> Verdict {
    with_worst(|w| {
        for (lambda, num, den) in [(0.25, 1, 4), (0.5, 1, 2), (0.75, 3, 4)] {
            let c = CantorConstruction::build(lambda, 14).unwrap();
            let d = c.box_dimension(4..=14).unwrap();
            let exact = 2f64.ln() / (2.0 / (1.0 - lambda)).ln();
            w.check(
                &format!("|dim − exact| λ={lambda}"),
                (d.estimate - exact).abs(),
                0.05,
            );
            let lq = BigRational::new(BigInt::from(num), BigInt::from(den));
            let keep = BigRational::one() - &lq;
            for j in 0..12u32 {
                let want =
                    &lq * Pow::pow(&keep, j) / BigRational::from_integer(BigInt::from(1u64) << j);
                let removed = c.removed_exact(j);
                w.require("2^j removed intervals", removed.len() == 1 << j);
                w.require(
                    "exact removed length",
                    removed.iter().all(|(lo, hi)| hi - lo == want),
                );
            }
        }
        let blocks = 3;
        let a = field_from_construction(blocks).unwrap();
        let mut suite = default_suite();
        for m in 1..=blocks {
            let c = 2.0 * m as f64;
            suite.push(TestFunction::mollifier(Vec2::new(c + 0.3, 0.1), 0.4, 3));
            suite.push(TestFunction::cutoff(Vec2::new(c + 0.5, -0.2), 0.2, 0.6));
        }
        for phi in &suite {
            w.check(
                "|Div A(φ)|",
                a.distributional_divergence(phi, 1e-12).unwrap().abs(),
                1e-10,
            );
        }
    })
}

fn tangent_blowup() -> Verdict {
    let radii = RadiusSchedule::new(0.2, 0.5, 10).unwrap();
    let suite = default_suite();
    let cases = [
        (
            "example",
            disc_field(Vec2::new(0.0, 1.0)),
            BVFunction::characteristic(disc(Vec2::ZERO, 1.0)).unwrap(),
            Vec2::polar(1.3),
        ),
        (
            "jump",
            jump_field(),
            affine_on_unit_disc(),
            Vec2::polar(-2.2),
        ),
        (
            "hyperplane",
            upper_field(Vec2::new(0.3, 1.7)),
            one_on(upper()),
            Vec2::new(0.4, 0.0),
        ),
    ];
    with_worst(|w| {
        for (name, f, u, x) in &cases {
            let b = tangent_blowup_check(f, u, *x, 1.0, &radii, &suite, TOL * 0.1).unwrap();
            // an exactly flat scene has zero gap at every radius
            let exact = b.final_gap() < 1e-12;
            w.require(
                &format!("{name} gap decreasing over the finest 4 radii"),
                b.monotone_tail(4) || exact,
            );
            w.check(&format!("{name} final gap"), b.final_gap(), 1e-3);
        }
    })
}

fn properties() -> Verdict {
    let s = TraceSettings::default();
    with_worst(|w| {
        // linearity of the pairing in the field
        let u = BVFunction::polynomial_on(
            disc(Vec2::new(0.2, 0.0), 0.9),
            Poly2::from_terms(&[(0, 0, 1.0), (0, 1, 0.5)]),
        )
        .unwrap();
        let phi = TestFunction::mollifier(Vec2::new(0.1, 0.3), 0.7, 3);
        for (c, ax, ay) in [(-1.5, 0.3, -0.8), (0.7, -1.0, 0.2), (2.0, 0.5, 0.5)] {
            let f = disc_field(Vec2::new(ax, ay));
            let g = poly_field();
            let sum = f.add(&g.scale(c).unwrap()).unwrap();
            let p = |a: &DMField| pairing_distributional(a, &u, &phi, None, TOL).unwrap();
            let lhs = p(&sum);
            w.check(
                "linearity",
                (lhs - p(&f) - c * p(&g)).abs() / (1.0 + lhs.abs()),
                1e-9,
            );
        }
        // half-ball densities bounded by the field norm
        let a = Vec2::new(1.2, -0.7);
        let f = disc_field(a);
        let uc = BVFunction::characteristic(disc(Vec2::ZERO, 1.0)).unwrap();
        for k in 0..6 {
            let x = Vec2::polar(0.9 * k as f64 + 0.1);
            let t = theta_density(&f, &uc, x, TraceMethod::Halfball, 0.5, &s).unwrap();
            w.check(
                "trace bound excess",
                (t.value.abs() - a.norm()).max(0.0),
                1e-6,
            );
        }
        // reversing the normal swaps and negates the one-sided traces
        let g = disc_field(Vec2::new(0.7, -0.4)).add(&poly_field()).unwrap();
        for k in 0..5 {
            let x = Vec2::polar(1.3 * k as f64);
            let nu = Vec2::polar(0.7 * k as f64 + 0.2);
            let p = halfball_estimates(&g, x, nu, &s.halfball).unwrap();
            let m = halfball_estimates(&g, x, -nu, &s.halfball).unwrap();
            w.check(
                "orientation flip",
                (m.plus.value + p.minus.value)
                    .abs()
                    .max((m.minus.value + p.plus.value).abs()),
                1e-9,
            );
        }
        // μ⌊E(B) = μ(E ∩ B)
        let mu = MeasureRep::lebesgue(Some(disc(Vec2::ZERO, 1.0)));
        let b = disc(Vec2::ZERO, 0.8);
        for c in [-0.6, 0.0, 0.35] {
            let e = FinitePerimeterSet::half_plane(Vec2::E1, c).unwrap();
            let lhs = mu.restrict(&e).eval_on(&b, 1e-12).unwrap();
            let rhs = mu
                .eval_on(&FinitePerimeterSet::intersection(vec![e, b.clone()]), 1e-12)
                .unwrap();
            w.check("restriction consistency", (lhs - rhs).abs(), 1e-10);
        }
        // bitwise determinism
        let d1 = pairing_distributional(&f, &uc, &phi, None, TOL).unwrap();
        let d2 = pairing_distributional(&f, &uc, &phi, None, TOL).unwrap();
        w.require("determinism", d1.to_bits() == d2.to_bits());
        let t1 = cyl_trace(&f, Vec2::polar(0.4), -Vec2::polar(0.4), &s.cylinder).unwrap();
        let t2 = cyl_trace(&f, Vec2::polar(0.4), -Vec2::polar(0.4), &s.cylinder).unwrap();
        w.require("determinism", t1.value.to_bits() == t2.value.to_bits());
    })
}

/// Name, time budget in seconds and check.
type Criterion = (&'static str, u64, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "disc example densities and cylinder integral",
            10,
            example_scene,
        ),
        (
            "constant-field and hyperplane traces",
            5,
            constant_and_hyperplane,
        ),
        (
            "trace-jump identity on five scenes",
            30,
            trace_jump_identity,
        ),
        (
            "Gauss–Green ledgers on disc, square and half-disc",
            60,
            gauss_green_ledgers,
        ),
        ("coarea disintegration", 60, coarea),
        (
            "distributional against analytic pairing",
            60,
            pairing_methods,
        ),
        ("λ-density collinearity", 60, lambda_collinearity),
        (
            "Cantor dimensions, lengths and divergence-free field",
            30,
            cantor_sets,
        ),
        ("tangent blow-up", 30, tangent_blowup),
        ("property checks", 300, properties),
    ];
    let mut failed = Vec::new();
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        // a panicking check fails its criterion without hiding the others
        let v = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let ok = v.passed && in_time;
        println!(
            "{} [{:>2}] {name}: {} in {:.2}s (budget {budget}s)",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            elapsed.as_secs_f64()
        );
        if !ok {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
