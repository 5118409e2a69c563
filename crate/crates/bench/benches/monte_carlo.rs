use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use trajrisk::bounds::{check_ratio_tail, check_vn_tail, estimate_coeff_mse, DesignSpec};
use trajrisk::sim::{simulate_path, ProcessModel, VolParams};

fn simulation(c: &mut Criterion) {
    let rw = ProcessModel::random_walk(1.0, 0.1);
    let garch = ProcessModel::heteroskedastic(
        1.0,
        0.1,
        VolParams {
            omega: 0.001,
            alpha: 0.1,
            beta: 0.8,
        },
    );
    c.bench_function("simulate_path/random_walk/100k", |b| {
        b.iter(|| black_box(simulate_path(&rw, 100_000, 7).unwrap()))
    });
    c.bench_function("simulate_path/heteroskedastic/100k", |b| {
        b.iter(|| black_box(simulate_path(&garch, 100_000, 7).unwrap()))
    });
}

fn bounds(c: &mut Criterion) {
    let design = DesignSpec::default();
    let mut group = c.benchmark_group("bounds");
    group.sample_size(10);
    group.bench_function("coeff_mse/n200/reps1000", |b| {
        b.iter(|| black_box(estimate_coeff_mse(&design, &[200], 1000, 1).unwrap()))
    });
    group.bench_function("vn_tail/n50/reps1000", |b| {
        b.iter(|| black_box(check_vn_tail(&design, 50, 0.2, 1000, 1).unwrap()))
    });
    group.bench_function("ratio_tail/n200/reps1000", |b| {
        b.iter(|| black_box(check_ratio_tail(&design, 200, &[0.002, 0.005], 1000, 1).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, simulation, bounds);
criterion_main!(benches);
