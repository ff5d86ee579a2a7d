use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polydisk_core::bounds::{general_bound, log_eta_inverse};
use polydisk_core::matrixlab::{
    affine_symbol_matrix, general_eigenvalues, kron_spectrum_check, random_triangular_pair,
    seeded_rng, singular_values, weyl_profile,
};
use polydisk_core::{WeightSequence, C64};

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("singular_values");
    for m in [20usize, 80, 200] {
        let t = affine_symbol_matrix(C64::new(0.6, 0.1), C64::new(0.2, -0.1), m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &t, |b, t| {
            b.iter(|| black_box(singular_values(t).unwrap()[0]))
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut rng = seeded_rng(0);
    let (t1, t2) = random_triangular_pair(&mut rng, 8).unwrap();
    let k = t1.kron(&t2).unwrap();
    c.bench_function("schur kron", |b| {
        b.iter(|| black_box(general_eigenvalues(&k).unwrap().max_residual))
    });
    c.bench_function("kron check", |b| {
        b.iter(|| black_box(kron_spectrum_check(&t1, &t2, 1e-8).unwrap().ok))
    });
    let t = affine_symbol_matrix(C64::new(0.5, 0.2), C64::new(0.1, 0.0), 20).unwrap();
    c.bench_function("weyl profile m=20", |b| {
        b.iter(|| black_box(weyl_profile(&t).unwrap().len()))
    });
}

fn bounds(c: &mut Criterion) {
    c.bench_function("log eta e^-0.05", |b| {
        b.iter(|| black_box(log_eta_inverse(black_box((-0.05f64).exp())).unwrap()))
    });
    let mut group = c.benchmark_group("general_bound");
    for spec in ["linear:beta=1", "tower:alpha=1"] {
        let w: WeightSequence = spec.parse().unwrap();
        group.bench_function(spec, |b| {
            b.iter(|| black_box(general_bound(&w, 10_000).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, svd, eigen, bounds);
criterion_main!(benches);
