use std::f64::consts::PI;
use std::hint::black_box;

use anidil_core::expansive::Dilation;
use anidil_core::grid::{GridSpec, SampledField};
use anidil_core::group::{ContinuousGroup, Side};
use anidil_core::kernels::{evolve, KernelSpec};
use anidil_core::linalg::{expm, from_rows, solve_lyapunov};
use anidil_core::maximal::{nontangential_maximal_parabolic, ConeParams, TestFunction};
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

fn jordan_group() -> ContinuousGroup {
    let a = from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]);
    ContinuousGroup::from_dilation(&Dilation::new(a).unwrap()).unwrap()
}

fn bump(n: usize) -> SampledField {
    let spec = GridSpec::new(2, n, 16.0).unwrap();
    SampledField::from_fn(spec, |x| Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).unwrap()
}

fn linalg(c: &mut Criterion) {
    let p = from_rows(&[
        &[0.3, 1.0, 0.0, 0.2],
        &[0.0, 0.3, 0.5, 0.0],
        &[0.1, 0.0, 0.2, -0.7],
        &[0.0, 0.0, 0.7, 0.2],
    ]);
    c.bench_function("expm 4x4", |b| b.iter(|| expm(black_box(&p)).unwrap()));
    c.bench_function("solve_lyapunov 4x4", |b| b.iter(|| solve_lyapunov(black_box(&p)).unwrap()));
    let g = jordan_group();
    c.bench_function("quasi_norm jordan", |b| {
        b.iter(|| g.quasi_norm(black_box(&[0.7, -1.3]), Side::Primal).unwrap())
    });
}

fn fields(c: &mut Criterion) {
    let f = bump(256);
    let k = KernelSpec::gaussian_b(jordan_group());
    c.bench_function("evolve gaussian-B 256^2", |b| b.iter(|| evolve(&k, black_box(&f), 1.0).unwrap()));

    let f = bump(128);
    let phi = TestFunction::isotropic(2, 0.5).unwrap();
    let cone = ConeParams::parabolic(ConeParams::log_spaced(0.25, 4.0, 5));
    let g = jordan_group();
    let mut group = c.benchmark_group("maximal");
    group.sample_size(10);
    group.bench_function("parabolic 128^2 x 5 scales", |b| {
        b.iter(|| nontangential_maximal_parabolic(black_box(&f), &phi, &g, &cone).unwrap())
    });
    group.finish();
}

criterion_group!(benches, linalg, fields);
criterion_main!(benches);
