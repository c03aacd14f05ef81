use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hypsiam_bench::{cloud, rng};
use hypsiam_core::hyperbolicity::{delta, delta_sampled, distance_matrix, minmax_product, GromovMatrix};
use hypsiam_core::Metric;
use std::hint::black_box;

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("delta_exact");
    g.sample_size(10);
    for n in [100, 250, 500] {
        let points = cloud(&mut rng(n as u64), n, 8);
        g.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, p| b.iter(|| delta(black_box(p), 0, &Metric::Euclidean).unwrap()));
    }
    g.finish();
}

fn minmax(c: &mut Criterion) {
    let points = cloud(&mut rng(7), 300, 8);
    let d = distance_matrix(&points, &Metric::Euclidean).unwrap();
    let gm = GromovMatrix::from_distances(&d, 0).unwrap();
    let mut g = c.benchmark_group("minmax_product");
    g.sample_size(10);
    g.bench_function("300", |b| b.iter(|| minmax_product(black_box(gm.matrix()), gm.matrix()).unwrap()));
    g.finish();
}

fn sampled(c: &mut Criterion) {
    let points = cloud(&mut rng(9), 5000, 8);
    let metric = Metric::poincare(1.0).unwrap();
    let scaled: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|v| v * 0.3).collect()).collect();
    let mut g = c.benchmark_group("delta_sampled");
    g.sample_size(10);
    g.bench_function("5000_points_200x5", |b| b.iter(|| delta_sampled(black_box(&scaled), 200, 5, 42, &metric).unwrap()));
    g.finish();
}

criterion_group!(benches, exact, minmax, sampled);
criterion_main!(benches);
