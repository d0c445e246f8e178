use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skelet_core::id::{rgks, rid, select_from_basis, Pivoter};
use skelet_core::linalg::{householder_qr, svd};
use skelet_core::pivoting::{golub_businger_cpqr, gu_eisenstat_srrqr};
use skelet_core::sketch::{gaussian, rsvd, RsvdConfig};
use skelet_core::testgen::{build_test_matrix, mixed_subspace_columns, SpectrumProfile, SubspaceKind, TestMatrixSpec};

fn test_matrix(n: usize) -> skelet_core::Matrix {
    let spec = TestMatrixSpec::new(n, SpectrumProfile::default_geometric(), 0.3, SubspaceKind::MixedHadamardPermutation, 1);
    build_test_matrix(&spec).unwrap().a
}

fn factorizations(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorizations");
    group.sample_size(10);
    for n in [64, 128] {
        let a = gaussian(n, n, 7);
        group.bench_with_input(BenchmarkId::new("householder_qr", n), &a, |b, a| b.iter(|| householder_qr(black_box(a))));
        group.bench_with_input(BenchmarkId::new("jacobi_svd", n), &a, |b, a| b.iter(|| svd(black_box(a))));
        group.bench_with_input(BenchmarkId::new("cpqr", n), &a, |b, a| b.iter(|| golub_businger_cpqr(black_box(a), n / 4)));
        group.bench_with_input(BenchmarkId::new("srrqr_f2", n), &a, |b, a| b.iter(|| gu_eisenstat_srrqr(black_box(a), n / 4, 2.0)));
    }
    group.finish();
}

fn selection(c: &mut Criterion) {
    let mut group = c.benchmark_group("selection");
    group.sample_size(10);
    let n = 256;
    let a = test_matrix(n);
    let v_k = svd(&a).unwrap().v_k(20);
    group.bench_function("rsvd_k20_q0", |b| b.iter(|| rsvd(black_box(&a), &RsvdConfig::new(20, 2, 0, 3))));
    group.bench_function("rsvd_k20_q2", |b| b.iter(|| rsvd(black_box(&a), &RsvdConfig::new(20, 2, 2, 3))));
    group.bench_function("gks_given_basis_k20", |b| b.iter(|| select_from_basis(black_box(&a), &v_k, 20, Pivoter::GolubBusinger)));
    group.bench_function("rgks_k20", |b| b.iter(|| rgks(black_box(&a), &RsvdConfig::new(20, 2, 0, 3))));
    group.bench_function("rid_k20", |b| b.iter(|| rid(black_box(&a), 20, 2, 3)));
    group.finish();
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("testgen");
    group.sample_size(10);
    for n in [512, 4096] {
        group.bench_with_input(BenchmarkId::new("mixed_polar_20_columns", n), &n, |b, &n| {
            b.iter(|| mixed_subspace_columns(n, 0.2, 20, 1))
        });
    }
    group.finish();
}

criterion_group!(benches, factorizations, selection, generation);
criterion_main!(benches);
