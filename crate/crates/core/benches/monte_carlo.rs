//! Monte Carlo throughput with and without the `parallel` feature.
//!
//! `cargo bench -p chibar` measures the rayon build, both on the global pool
//! and on a one-thread pool; `cargo bench -p chibar --no-default-features`
//! measures the sequential fallback. Criterion keeps the estimates under
//! distinct ids so the runs can be compared side by side.

use std::hint::black_box;

use chibar::chibar::weights_monte_carlo;
use chibar::gp::{build_covariance, Simulator};
use chibar::models::{self, ModelConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn pools() -> Vec<(String, Option<rayon::ThreadPool>)> {
    let mut out = vec![(MODE.to_string(), None)];
    if cfg!(feature = "parallel") {
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("pool");
        out.push(("parallel-1-thread".into(), Some(one)));
    }
    out
}

fn run<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn weights(c: &mut Criterion) {
    let cone = models::named_cone("random-r3", &ModelConfig::default()).unwrap();
    let n = 100_000;
    let mut g = c.benchmark_group("weights_mc");
    g.throughput(Throughput::Elements(n as u64));
    g.sample_size(10);
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("random-r3", &label), |b| {
            b.iter(|| {
                run(&pool, || {
                    black_box(weights_monte_carlo(&cone, n, 1).unwrap())
                })
            })
        });
    }
    g.finish();
}

fn suprema(c: &mut Criterion) {
    let cfg = ModelConfig::default();
    let reps = 10_000;
    let mut g = c.benchmark_group("simulate_sup");
    g.throughput(Throughput::Elements(reps as u64));
    g.sample_size(10);
    for name in ["mix1", "mix3", "linkage:sib-pair"] {
        let m = models::model(name, &cfg).unwrap();
        let grid = m.grid(Some(41)).unwrap();
        let cones = m.cones(&grid).unwrap();
        let factor = build_covariance(m.kernel.as_ref(), &grid).unwrap();
        let sim = Simulator::new(&factor, None, &cones).unwrap();
        for (label, pool) in pools() {
            g.bench_function(BenchmarkId::new(name, &label), |b| {
                b.iter(|| run(&pool, || black_box(sim.run(reps, 1))))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, weights, suprema);
criterion_main!(benches);
