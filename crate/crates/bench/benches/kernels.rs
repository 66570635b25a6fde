use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nanonmr_core::dipolar::{self, IntegralMethod, IntegralSpec, SampleGeometry, MAGIC_ANGLE};
use nanonmr_core::multi::{self, MultiSensorParams};
use nanonmr_core::qfi::Stencil;
use nanonmr_core::simple::{self, SimpleModelParams};
use nanonmr_core::undriven::{self, Lorentzian, PulseTrain};

fn simple_model(c: &mut Criterion) {
    let p = SimpleModelParams::at_theta(10_000, 0.05, 0.3);
    c.bench_function("simple/qfi_components", |b| b.iter(|| simple::qfi_components(black_box(&p))));
    let small = SimpleModelParams::at_theta(6, 0.2, 0.7);
    c.bench_function("simple/brute_force_n6", |b| {
        b.iter(|| simple::brute_force_coherence(black_box(&small)).unwrap())
    });
}

fn integrals(c: &mut Criterion) {
    let geom = SampleGeometry { alpha: MAGIC_ANGLE, ..SampleGeometry::water(10.0) };
    let spec = IntegralSpec::new(&[1, -1], geom);
    c.bench_function("dipolar/analytic_order2", |b| {
        b.iter(|| dipolar::dipolar_integral(black_box(&spec), IntegralMethod::Analytic).unwrap())
    });
    c.bench_function("dipolar/quadrature_order2", |b| {
        b.iter(|| dipolar::dipolar_integral(black_box(&spec), IntegralMethod::Quadrature).unwrap())
    });
}

fn multi_sensor(c: &mut Criterion) {
    let p = MultiSensorParams::new(50, 5000, 0.1, 0.2, 1.0).unwrap();
    c.bench_function("multi/qfi_m50", |b| {
        b.iter(|| multi::qfi_multi(black_box(&p), 1e-5, Stencil::Central).unwrap())
    });
    c.bench_function("multi/fi_y_m50", |b| b.iter(|| multi::fi_y(black_box(&p)).unwrap()));
}

fn filter_overlap(c: &mut Criterion) {
    let pulse = PulseTrain::new(1.0, 0.0);
    let spectrum = Lorentzian { variance: 1.0, rate: 0.3 };
    let mut group = c.benchmark_group("undriven");
    group.sample_size(10);
    group.bench_function("s2_lorentzian_tau20", |b| {
        b.iter(|| undriven::filter_overlap_s2(&pulse, black_box(&spectrum), 20.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, simple_model, integrals, multi_sensor, filter_overlap);
criterion_main!(benches);
