use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use resfree_bench::{fixture, sector, HBAR};
use resfree_core::{assemble_h_theta, coercivity_scan, invert_r_theta, sigma_min, Complex64, ScanRect};
use std::hint::black_box;

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_h_theta");
    for n in [400, 1600, 6400] {
        let (grid, p, m) = fixture(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| assemble_h_theta(black_box(&grid), 0, &p, &m, HBAR).unwrap())
        });
    }
    g.finish();
}

fn smallest_singular_value(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma_min");
    let z = Complex64::new(-1.0, -0.03);
    for n in [400, 1600, 6400] {
        let op = sector(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| sigma_min(&op, black_box(z)).unwrap()));
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let op = sector(800);
    let rect = ScanRect::centered(Complex64::new(-1.0, -0.025), 0.05, 0.0125, 11, 6);
    let mut g = c.benchmark_group("coercivity_scan");
    g.sample_size(10);
    g.bench_function("800x66", |b| b.iter(|| coercivity_scan(&op, black_box(&rect)).unwrap()));
    g.finish();
}

fn inversion(c: &mut Criterion) {
    let (_, p, _) = fixture(16);
    let p = p.with_theta(Complex64::new(0.3, 0.0));
    c.bench_function("invert_r_theta", |b| b.iter(|| invert_r_theta(&p, black_box(2.5), None).unwrap()));
}

criterion_group!(benches, assembly, smallest_singular_value, scan, inversion);
criterion_main!(benches);
