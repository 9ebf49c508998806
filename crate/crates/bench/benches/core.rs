use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use furstenberg::algebraic::exact_product_entropy;
use furstenberg::circle::{detail, order_k_detail, wasserstein1, CircleMeasure};
use furstenberg::sl2::cartan_decompose;
use furstenberg::walk::{estimate_lyapunov, estimate_stationary, StationaryMethod};
use furstenberg_bench::{elements, smooth_measure, two_gen};

fn sl2(c: &mut Criterion) {
    let gs = elements(1024);
    c.bench_function("cartan_decompose_1024", |b| {
        b.iter(|| gs.iter().filter_map(|g| cartan_decompose(black_box(g)).ok()).count())
    });
}

fn circle(c: &mut Criterion) {
    let m = smooth_measure();
    c.bench_function("detail_grid_2^14", |b| b.iter(|| detail(black_box(&m), 0.01).unwrap()));
    c.bench_function("order_3_detail_grid_2^14", |b| b.iter(|| order_k_detail(black_box(&m), 0.01, 3).unwrap()));
    let pts: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.618_033_988_75).rem_euclid(std::f64::consts::PI)).collect();
    let e = CircleMeasure::empirical(&pts).unwrap();
    c.bench_function("wasserstein1_grid_vs_10k_atoms", |b| b.iter(|| wasserstein1(black_box(&m), black_box(&e))));
}

fn walks(c: &mut Criterion) {
    let spec = two_gen(20);
    let mut g = c.benchmark_group("walk");
    g.sample_size(10);
    g.bench_function("lyapunov_100x2000", |b| b.iter(|| estimate_lyapunov(&spec, 2000, 100, black_box(1)).unwrap()));
    g.bench_function("stationary_2000x500", |b| {
        b.iter(|| estimate_stationary(&spec, 500, 2000, black_box(1), StationaryMethod::Forward).unwrap())
    });
    g.finish();
}

fn exact(c: &mut Criterion) {
    let spec = two_gen(5);
    let mut g = c.benchmark_group("exact");
    g.sample_size(10);
    g.bench_function("entropy_two_gen_5_depth_10", |b| b.iter(|| exact_product_entropy(black_box(&spec), 10).unwrap()));
    g.finish();
}

criterion_group!(benches, sl2, circle, walks, exact);
criterion_main!(benches);
