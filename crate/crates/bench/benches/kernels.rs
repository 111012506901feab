use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fracsob_bench::{circle, perturbed_identity, smooth};
use fracsob_core::mollify::Mollifier;
use fracsob_core::{hodge, jacobian, sobolev, Mask};

fn mollifier(c: &mut Criterion) {
    let mut g = c.benchmark_group("mollify");
    for n in [64, 128, 256] {
        let f = smooth(n);
        let eps = f.grid.length / 16.0;
        g.bench_with_input(BenchmarkId::new("build", n), &n, |b, _| b.iter(|| Mollifier::new(f.grid, black_box(eps)).unwrap()));
        let m = Mollifier::new(f.grid, eps).unwrap();
        g.bench_with_input(BenchmarkId::new("apply", n), &n, |b, _| b.iter(|| m.apply(black_box(&f)).unwrap()));
    }
    g.finish();
}

fn gagliardo(c: &mut Criterion) {
    let mut g = c.benchmark_group("gagliardo");
    g.sample_size(10);
    for n in [32, 64] {
        let f = smooth(n);
        let win = Mask::disk(f.grid, 0.25 * f.grid.length);
        g.bench_with_input(BenchmarkId::new("full", n), &n, |b, _| {
            b.iter(|| sobolev::gagliardo_seminorm(black_box(&f), 0.5, 2.0, None).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("window", n), &n, |b, _| {
            b.iter(|| sobolev::gagliardo_seminorm(black_box(&f), 0.5, 2.0, Some(&win)).unwrap())
        });
    }
    g.finish();
}

fn hodge_split(c: &mut Criterion) {
    let mut g = c.benchmark_group("hodge");
    for n in [64, 128, 256] {
        let lambda = smooth(n);
        let u = smooth(n);
        g.bench_with_input(BenchmarkId::new("decompose", n), &n, |b, _| {
            b.iter(|| hodge::hodge_decompose(black_box(&lambda), black_box(&u)).unwrap())
        });
    }
    g.finish();
}

fn degree(c: &mut Criterion) {
    let mut g = c.benchmark_group("degree");
    let f = perturbed_identity(128);
    for samples in [256, 1024, 4096] {
        let contour = circle(samples);
        g.bench_with_input(BenchmarkId::new("winding", samples), &samples, |b, _| {
            b.iter(|| jacobian::degree(black_box(&f), &contour, [0.01, -0.02]).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mollifier, gagliardo, hodge_split, degree);
criterion_main!(benches);
