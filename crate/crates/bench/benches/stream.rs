use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use polydisk_core::bounds::partition_numbers;
use polydisk_core::cone::enumerate_below;
use polydisk_core::{EigenvalueStream, WeightSequence};

fn stream(c: &mut Criterion) {
    let mut group = c.benchmark_group("stream");
    for spec in [
        "linear:beta=1",
        "geometric:rho=0.6",
        "tower:alpha=1",
        "list:0.5,0.5,0.3",
    ] {
        let w: WeightSequence = spec.parse().unwrap();
        for n in [5_000u64, 100_000] {
            group.throughput(Throughput::Elements(n));
            group.bench_with_input(BenchmarkId::new(spec, n), &n, |b, &n| {
                b.iter(|| {
                    let mut s = EigenvalueStream::new(&w);
                    let mut last = 0.0;
                    for _ in 0..n {
                        last = s.next_point().unwrap().log_value;
                    }
                    black_box(last)
                })
            });
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let w: WeightSequence = "linear:beta=1".parse().unwrap();
    c.bench_function("enumerate_below linear 22", |b| {
        b.iter(|| {
            black_box(
                enumerate_below(&w, black_box(22.0), 10_000_000)
                    .unwrap()
                    .len(),
            )
        })
    });
}

fn partitions(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition_numbers");
    for n in [1_000usize, 10_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| black_box(partition_numbers(n).unwrap().len()))
        });
    }
    group.finish();
}

criterion_group!(benches, stream, oracle, partitions);
criterion_main!(benches);
