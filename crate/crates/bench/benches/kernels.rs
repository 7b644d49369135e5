use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use divpair::cantorlab::CantorConstruction;
use divpair::geometry::{Axis, FinitePerimeterSet};
use divpair::measures::TestFunction;
use divpair::pairing::{
    coarea_pairing_check, gauss_green, pairing_distributional, GaussGreenVariant, TraceMethod,
    TraceSettings,
};
use divpair::scenes::{BVFunction, DMField};
use divpair::traces::{cyl_trace, halfball_traces, CylinderSchedule, RadiusSchedule};
use divpair::{Vec2, VecPoly};
use divpair_bench::{affine_on_disc, disc_field, jump_field, unit_disc};
use std::hint::black_box;

fn traces(c: &mut Criterion) {
    let f = disc_field(Vec2::new(0.0, 1.0));
    let x = Vec2::polar(0.7);
    c.bench_function("halfball_traces", |b| {
        b.iter(|| halfball_traces(&f, black_box(x), -x, &RadiusSchedule::default()).unwrap())
    });
    c.bench_function("cyl_trace", |b| {
        b.iter(|| cyl_trace(&f, black_box(x), -x, &CylinderSchedule::default()).unwrap())
    });
}

fn pairing(c: &mut Criterion) {
    let f = jump_field();
    let u = affine_on_disc();
    let phi = TestFunction::mollifier(Vec2::new(0.7, 0.7), 0.5, 3);
    c.bench_function("pairing_distributional", |b| {
        b.iter(|| pairing_distributional(&f, &u, black_box(&phi), None, 1e-10).unwrap())
    });
    let s = TraceSettings::default();
    let mut g = c.benchmark_group("gauss_green");
    for m in [TraceMethod::Analytic, TraceMethod::Halfball] {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{m:?}")),
            &m,
            |b, &m| {
                b.iter(|| {
                    gauss_green(
                        &f,
                        &u,
                        &unit_disc(),
                        GaussGreenVariant::Interior,
                        m,
                        &s,
                        1e-10,
                    )
                    .unwrap()
                })
            },
        );
    }
    g.finish();
}

fn coarea(c: &mut Criterion) {
    let e1 = DMField::smooth_field(VecPoly::constant(Vec2::E1));
    let window = FinitePerimeterSet::rectangle(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap();
    let mut g = c.benchmark_group("coarea_staircase");
    g.sample_size(10);
    for depth in [6u32, 9, 12] {
        let u = BVFunction::staircase(0.5, depth, Axis::X1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(depth), &u, |b, u| {
            b.iter(|| coarea_pairing_check(&e1, u, &window, 1e-9).unwrap())
        });
    }
    g.finish();
}

fn cantor(c: &mut Criterion) {
    let mut g = c.benchmark_group("box_dimension");
    for depth in [10u32, 14] {
        g.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, &depth| {
            b.iter(|| {
                CantorConstruction::build(0.5, depth)
                    .unwrap()
                    .box_dimension(4..=depth)
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, traces, pairing, coarea, cantor);
criterion_main!(benches);
