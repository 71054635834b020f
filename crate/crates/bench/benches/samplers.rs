use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tinygiant::constants::{critical_constants, Kernel, ModelParams};
use tinygiant::fixedpoint::{build_kernel_grid, operator_norm};
use tinygiant::limitmodel::{LimitParams, LimitSampler};
use tinygiant::{build_weights, connected_components, sample_graph};

fn params(n: usize, factor: f64) -> ModelParams {
    let p = ModelParams::new(2.5, 1.0, n, Kernel::Nr, 0.0).unwrap();
    let lc = critical_constants(&p.exponents().unwrap(), Kernel::Nr).unwrap().lambda_c;
    p.with_lambda(factor * lc)
}

fn graph_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_graph");
    group.sample_size(20);
    for n in [10_000usize, 100_000, 1_000_000] {
        let p = params(n, 2.0);
        let ws = build_weights(&p).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                black_box(sample_graph(&ws, Kernel::Nr, p.pi(), seed).unwrap())
            })
        });
    }
    group.finish();
}

fn components(c: &mut Criterion) {
    let p = params(1_000_000, 2.0);
    let ws = build_weights(&p).unwrap();
    let g = sample_graph(&ws, Kernel::Nr, p.pi(), 1).unwrap();
    c.bench_function("connected_components/1e6", |b| {
        b.iter(|| black_box(connected_components(&g, ws.weights()).unwrap()))
    });
}

fn limit_graph(c: &mut Criterion) {
    let p = params(1000, 0.8);
    let lp = LimitParams::new(p.exponents().unwrap(), p.lambda, 10_000, Kernel::Nr).unwrap();
    let s = LimitSampler::new(lp).unwrap();
    let mut rep = 0;
    c.bench_function("limit_coupled/M=1e4", |b| {
        b.iter(|| {
            rep += 1;
            black_box(s.sample_coupled(1, rep))
        })
    });
}

fn norms(c: &mut Criterion) {
    let e = params(1000, 1.0).exponents().unwrap();
    let mut group = c.benchmark_group("operator_norm");
    group.sample_size(10);
    for n in [256usize, 1024] {
        let kg = build_kernel_grid(20.0, n, &e, Kernel::Nr).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(operator_norm(&kg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, graph_sampling, components, limit_graph, norms);
criterion_main!(benches);
