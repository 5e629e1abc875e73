use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use superent::divergences::{channel_divergence, channel_entropy, rel_entropy};
use superent::linalg::{herm_eig, partial_trace, Keep};
use superent::recovery::{petz, universal_recovery};
use superent::{OptimizerOpts, Quadrature};
use superent_bench::{channel, state, superchannel};

fn linalg(c: &mut Criterion) {
    let mut g = c.benchmark_group("linalg");
    for d in [2usize, 4, 8, 16] {
        let rho = state(d);
        g.bench_with_input(BenchmarkId::new("herm_eig", d), &rho, |b, m| b.iter(|| herm_eig(black_box(m))));
    }
    let rho = state(16);
    g.bench_function("partial_trace_4x4", |b| b.iter(|| partial_trace(black_box(&rho), (4, 4), Keep::First)));
    let (a, s) = (state(4), state(4));
    g.bench_function("rel_entropy_4", |b| b.iter(|| rel_entropy(black_box(&a), black_box(&s))));
    g.finish();
}

fn recovery(c: &mut Criterion) {
    let mut g = c.benchmark_group("recovery");
    let (sigma, n) = (state(3), channel(3, 3));
    g.bench_function("petz_3", |b| b.iter(|| petz(black_box(&sigma), black_box(&n))));
    let q = Quadrature::default();
    g.bench_function("universal_3_801", |b| b.iter(|| universal_recovery(black_box(&sigma), black_box(&n), &q)));
    g.finish();
}

fn optimization(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimization");
    g.sample_size(10);
    let (n, m) = (channel(2, 2), channel(2, 2));
    let opts = OptimizerOpts::default().with_restarts(4).optimized_only();
    g.bench_function("divergence_qubit_4_restarts", |b| b.iter(|| channel_divergence(&n, &m, black_box(&opts))));
    g.bench_function("entropy_qubit_4_restarts", |b| b.iter(|| channel_entropy(&n, black_box(&opts))));
    let theta = superchannel();
    g.bench_function("apply_superchannel", |b| b.iter(|| theta.apply(black_box(&n))));
    g.finish();
}

criterion_group!(benches, linalg, recovery, optimization);
criterion_main!(benches);
