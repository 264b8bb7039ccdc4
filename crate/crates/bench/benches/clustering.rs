use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slke::metrics::{accuracy, hungarian, nmi};
use slke::spectral::{spectral_clustering, Affinity};

/// Block affinity with `k` blocks of size `m` plus uniform noise.
fn noisy_blocks(k: usize, m: usize) -> Affinity {
    let n = k * m;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut a = DMatrix::from_fn(n, n, |i, j| if i / m == j / m { 1.0 } else { 0.0 });
    for i in 0..n {
        for j in i + 1..n {
            let e = rng.random_range(0.0..0.2);
            a[(i, j)] += e;
            a[(j, i)] += e;
        }
    }
    Affinity::new(a).unwrap()
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_clustering");
    g.sample_size(20);
    for m in [10, 30, 60] {
        let a = noisy_blocks(3, m);
        g.bench_function(BenchmarkId::from_parameter(3 * m), |b| b.iter(|| spectral_clustering(&a, 3, 0).unwrap()));
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut g = c.benchmark_group("metrics");
    for k in [5, 20, 60] {
        let cost = DMatrix::from_fn(k, k, |_, _| rng.random_range(0.0..1.0));
        g.bench_function(BenchmarkId::new("hungarian", k), |b| b.iter(|| hungarian(&cost).unwrap()));
    }
    let truth: Vec<usize> = (0..2000).map(|_| rng.random_range(0..10)).collect();
    let pred: Vec<usize> = (0..2000).map(|_| rng.random_range(0..10)).collect();
    g.bench_function("accuracy_n2000_k10", |b| b.iter(|| accuracy(&truth, &pred).unwrap()));
    g.bench_function("nmi_n2000_k10", |b| b.iter(|| nmi(&truth, &pred).unwrap()));
    g.finish();
}

criterion_group!(benches, spectral, metrics);
criterion_main!(benches);
