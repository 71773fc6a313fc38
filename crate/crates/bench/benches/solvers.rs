use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use infodesign::equilibrium::{regimes_general, revenue_function, solve_potential};
use infodesign::optimizer::{dp_partitional, solve_prop8};
use infodesign_bench::{complete, path};

fn equilibrium(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_potential");
    for n in [4, 8] {
        let (net, prior) = complete(n);
        let s = net.intercepts(prior.mean() + 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| b.iter(|| solve_potential(&net, black_box(s))));
    }
    group.finish();
}

fn regimes(c: &mut Criterion) {
    let mut group = c.benchmark_group("regimes_general");
    for n in [4, 8] {
        let (net, prior) = path(n);
        group.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| regimes_general(black_box(&net), &prior)));
    }
    group.finish();
}

fn optimizers(c: &mut Criterion) {
    let (net, prior) = path(6);
    let f = revenue_function(&regimes_general(&net, &prior).expect("balanced path"));
    let mut group = c.benchmark_group("optimizers");
    group.sample_size(20);
    for eps in [1.0 / 64.0, 1.0 / 256.0] {
        group.bench_with_input(BenchmarkId::new("prop8", eps), &eps, |b, &eps| b.iter(|| solve_prop8(&f, &prior, eps)));
        group.bench_with_input(BenchmarkId::new("dp", eps), &eps, |b, &eps| b.iter(|| dp_partitional(&f, &prior, eps)));
    }
    group.finish();
}

criterion_group!(benches, equilibrium, regimes, optimizers);
criterion_main!(benches);
