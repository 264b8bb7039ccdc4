use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slke::dataset::gaussian_blobs;
use slke::kernels::{build_kernel, rescale_kernel, KernelSpec};
use slke::solver::{prox_l1, prox_nuclear, update_j, SolverState};
use slke::{Regularizer, SolverConfig};

fn random(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

fn blob_kernel(per_cluster: usize) -> DMatrix<f64> {
    let centers = [vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, 8.66]];
    let (x, _) = gaussian_blobs(&centers, 1.0, per_cluster, 0).unwrap();
    rescale_kernel(&build_kernel(&x, KernelSpec::Gaussian { t: 1.0 }).unwrap())
        .unwrap()
        .into_inner()
}

fn prox(c: &mut Criterion) {
    let mut g = c.benchmark_group("prox");
    for n in [30, 90, 180] {
        let h = random(n, 1);
        g.bench_with_input(BenchmarkId::new("nuclear", n), &h, |b, h| b.iter(|| prox_nuclear(h, 0.1).unwrap()));
        g.bench_with_input(BenchmarkId::new("l1", n), &h, |b, h| b.iter(|| prox_l1(h, 0.1)));
    }
    g.finish();
}

fn linear_update(c: &mut Criterion) {
    let mut g = c.benchmark_group("update_j");
    for n in [30, 90, 180] {
        let (k, w, z, y) = (random(n, 2), random(n, 3), random(n, 4), random(n, 5));
        let k = &k * k.transpose();
        g.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| update_j(&k, &w, &z, &y, 1.0).unwrap()));
    }
    g.finish();
}

fn admm_iteration(c: &mut Criterion) {
    let mut g = c.benchmark_group("admm_step");
    g.sample_size(20);
    for per_cluster in [10, 30, 60] {
        let k = blob_kernel(per_cluster);
        for reg in [Regularizer::Sparse, Regularizer::LowRank] {
            let cfg = SolverConfig::new(reg, 1e-3);
            g.bench_function(BenchmarkId::new(reg.to_string(), k.nrows()), |b| {
                b.iter_batched(
                    || SolverState::initial(k.nrows(), 0, cfg.mu),
                    |mut s| s.step(&k, &cfg).unwrap(),
                    criterion::BatchSize::LargeInput,
                )
            });
        }
    }
    g.finish();
}

criterion_group!(benches, prox, linear_update, admm_iteration);
criterion_main!(benches);
