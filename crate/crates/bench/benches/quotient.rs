use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcorr_core::{
    empirical_scores, frechet_quantile, generate, plain_quotient, rank_frechet_scores,
    tail_quotient_correlation, ModelKind, ModelSpec,
};

fn quotient(c: &mut Criterion) {
    let mut group = c.benchmark_group("plain_quotient");
    for n in [500, 10_000, 100_000] {
        let sample = generate(&ModelSpec::new(ModelKind::A, n, 1)).unwrap();
        let scores = empirical_scores(&sample).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &scores, |b, s| {
            b.iter(|| plain_quotient(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn tail(c: &mut Criterion) {
    let sample = generate(&ModelSpec::new(ModelKind::B, 10_000, 2)).unwrap();
    let scores = empirical_scores(&sample).unwrap();
    let u = frechet_quantile(0.95).unwrap();
    c.bench_function("tail_quotient/10000", |b| {
        b.iter(|| tail_quotient_correlation(black_box(&scores), u).unwrap())
    });
}

fn transforms(c: &mut Criterion) {
    let sample = generate(&ModelSpec::new(ModelKind::F, 10_000, 3)).unwrap();
    c.bench_function("empirical_scores/10000", |b| {
        b.iter(|| empirical_scores(black_box(&sample)).unwrap())
    });
    c.bench_function("rank_scores/10000x10", |b| {
        b.iter(|| rank_frechet_scores(black_box(&sample), 7, 10).unwrap())
    });
}

fn models(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for model in [ModelKind::A, ModelKind::B, ModelKind::D, ModelKind::H] {
        group.bench_function(model.tag(), |b| {
            b.iter(|| generate(black_box(&ModelSpec::new(model, 10_000, 4))).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, quotient, tail, transforms, models);
criterion_main!(benches);
