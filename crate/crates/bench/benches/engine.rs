use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use unichar_bench::{bilinear_system, unitriangular_data};
use unichar_core::oracle::{class_count, unitriangular_algebra};
use unichar_core::{count_solutions, Engine, Field, PatternEngine, Poset};

fn unitriangular(c: &mut Criterion) {
    let mut group = c.benchmark_group("unitriangular");
    group.sample_size(10);
    for n in [6, 8, 10] {
        group.bench_with_input(BenchmarkId::new("pattern", n), &n, |b, &n| {
            b.iter(|| PatternEngine::default().run(&Poset::chain(n)).unwrap())
        });
    }
    for n in [6, 8] {
        let data = unitriangular_data(n);
        group.bench_with_input(BenchmarkId::new("general", n), &data, |b, data| {
            b.iter(|| Engine::default().general(black_box(data)).unwrap())
        });
    }
    group.finish();
}

fn solution_counts(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_solutions");
    for k in [1, 2, 3] {
        let system = bilinear_system(k);
        group.bench_with_input(BenchmarkId::new("bilinear", k), &system, |b, s| {
            b.iter(|| count_solutions(black_box(s)))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("class_count");
    group.sample_size(10);
    for (n, q) in [(4, 3), (5, 2), (5, 3)] {
        let alg = unitriangular_algebra(n, &Field::new(q).unwrap()).unwrap();
        group.bench_function(format!("U_{n}({q})"), |b| {
            b.iter(|| class_count(black_box(&alg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, unitriangular, solution_counts, oracle);
criterion_main!(benches);
