use cdfsort::classic::{learned_quicksort, quicksort_learned_pivot, DEFAULT_BASE_CASE};
use cdfsort::data::{generate, DatasetSpec};
use cdfsort::{learned_sort_classic, sort, Key, SortConfig};
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};

const N: usize = 1_000_000;

fn dataset(name: &str, n: usize) -> Vec<Key> {
    generate(&DatasetSpec::new(name, n, 42).expect("known generator")).expect("generate")
}

fn hybrid(c: &mut Criterion) {
    let cfg = SortConfig::default();
    let mut group = c.benchmark_group("hybrid");
    group.throughput(Throughput::Elements(N as u64));
    group.sample_size(10);
    for name in ["uniform", "normal", "lognormal", "rootdups", "twodups", "zipf"] {
        let keys = dataset(name, N);
        group.bench_with_input(BenchmarkId::from_parameter(name), &keys, |b, keys| {
            b.iter_batched_ref(|| keys.clone(), |v| sort(v, &cfg), BatchSize::LargeInput)
        });
    }
    group.finish();
}

fn drivers(c: &mut Criterion) {
    let cfg = SortConfig::default();
    let keys = dataset("uniform", N);
    let mut group = c.benchmark_group("uniform-drivers");
    group.throughput(Throughput::Elements(N as u64));
    group.sample_size(10);
    group.bench_function("hybrid", |b| {
        b.iter_batched_ref(|| keys.clone(), |v| sort(v, &cfg), BatchSize::LargeInput)
    });
    group.bench_function("learnedsort-classic", |b| {
        b.iter_batched_ref(|| keys.clone(), |v| learned_sort_classic(v, &cfg), BatchSize::LargeInput)
    });
    group.bench_function("learned-quicksort", |b| {
        b.iter_batched_ref(|| keys.clone(), |v| learned_quicksort(v, DEFAULT_BASE_CASE), BatchSize::LargeInput)
    });
    group.bench_function("quicksort-learned-pivot", |b| {
        b.iter_batched_ref(
            || keys.clone(),
            |v| quicksort_learned_pivot(v, DEFAULT_BASE_CASE),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("std-unstable", |b| {
        b.iter_batched_ref(|| keys.clone(), |v| v.sort_unstable(), BatchSize::LargeInput)
    });
    group.finish();
}

criterion_group!(benches, hybrid, drivers);
criterion_main!(benches);
