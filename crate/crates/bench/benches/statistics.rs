use std::hint::black_box;

use canonstat::stats::{u_statistic_naive, u_statistic_series, v_statistic_naive, v_statistic_series};
use canonstat::OrthonormalBasis;
use canonstat_bench::{dense_tensor, series_kernel, uniform_sample};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn v_series_vs_naive(c: &mut Criterion) {
    let basis = OrthonormalBasis::trig();
    let tensor = dense_tensor(2, 3);
    let kernel = series_kernel(&tensor);
    let mut group = c.benchmark_group("v_statistic_m2");
    for n in [25, 50, 100, 200] {
        let sample = uniform_sample(n, 1);
        group.bench_with_input(BenchmarkId::new("series", n), &sample, |b, s| {
            b.iter(|| v_statistic_series(&tensor, &basis, black_box(s)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("naive", n), &sample, |b, s| {
            b.iter(|| v_statistic_naive(&kernel, black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn u_partitions(c: &mut Criterion) {
    let basis = OrthonormalBasis::trig();
    let mut group = c.benchmark_group("u_statistic_n40");
    let sample = uniform_sample(40, 2);
    for m in [2, 3, 4] {
        let tensor = dense_tensor(m, 2);
        let kernel = series_kernel(&tensor);
        group.bench_with_input(BenchmarkId::new("series", m), &tensor, |b, t| {
            b.iter(|| u_statistic_series(t, &basis, black_box(&sample)).unwrap())
        });
        if m <= 3 {
            group.bench_with_input(BenchmarkId::new("naive", m), &kernel, |b, k| {
                b.iter(|| u_statistic_naive(k, black_box(&sample)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, v_series_vs_naive, u_partitions);
criterion_main!(benches);
