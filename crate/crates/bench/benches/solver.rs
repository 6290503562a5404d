use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eulerlab_core::*;

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk4_step");
    for n in [64, 128, 256] {
        let g = PeriodicGrid::new(2, n).unwrap();
        let s = SolverState::new(0.0, random_divfree(g, 3.0, 0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| step(black_box(&s), 1e-3).unwrap())
        });
    }
    group.finish();
}

fn short_runs(c: &mut Criterion) {
    let g = PeriodicGrid::new(2, 64).unwrap();
    let u0 = random_divfree(g, 3.0, 0);
    let rho0 = ScalarField::from_fn(g, |x| 1.0 + 0.3 * (std::f64::consts::PI * x[0]).sin());
    let cfg = SolverConfig::new(64, 2e-3, 0.02).with_stride(5);
    let mut group = c.benchmark_group("solve_64_10_steps");
    group.sample_size(10);
    group.bench_function("homogeneous", |b| b.iter(|| solve(black_box(&u0), &cfg).unwrap()));
    group.bench_function("variable_density", |b| {
        b.iter(|| inhom_solve(black_box(&rho0), &u0, &cfg).unwrap())
    });
    group.bench_function("boussinesq", |b| {
        b.iter(|| boussinesq_solve(black_box(&rho0), &u0, [0.0, -1.0], &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, steps, short_runs);
criterion_main!(benches);
