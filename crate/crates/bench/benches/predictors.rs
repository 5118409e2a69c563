use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use trajrisk::predictors::{fit_linear_one_param, nn_forecast, NNIndex};
use trajrisk::sim::{simulate_path, ProcessModel};
use trajrisk::windows::{make_windows, Dataset};

fn dataset(windows: usize, lookback: usize, horizon: usize) -> Dataset {
    let len = lookback + windows * horizon + horizon;
    let path = simulate_path(&ProcessModel::random_walk(1.0, 0.1), len, 1).unwrap();
    let mut d = make_windows(&path, lookback, horizon, horizon).unwrap();
    d.pairs.truncate(windows);
    d
}

fn nearest_neighbour(c: &mut Criterion) {
    let mut group = c.benchmark_group("nn_forecast");
    let mut rng = StdRng::seed_from_u64(2);
    for n in [100, 1_000, 10_000] {
        let train = dataset(n, 20, 30);
        let index = NNIndex::new(&train).unwrap();
        let queries: Vec<Vec<f64>> = (0..64)
            .map(|_| (0..20).map(|_| 1.0 + rng.random_range(-0.5..0.5)).collect())
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &queries, |b, qs| {
            b.iter(|| {
                for q in qs {
                    black_box(nn_forecast(&index, q).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn linear_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_linear_one_param");
    for n in [100, 10_000] {
        let train = dataset(n, 451, 30);
        group.bench_with_input(BenchmarkId::from_parameter(n), &train, |b, t| {
            b.iter(|| black_box(fit_linear_one_param(t).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, nearest_neighbour, linear_fit);
criterion_main!(benches);
