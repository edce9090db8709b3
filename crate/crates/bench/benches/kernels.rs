use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use pdsvm::solver::UpdateForm;
use pdsvm::solver_mm::{mm_update, MmWorkspace};
use pdsvm::solver_sd::{sd_update, SdWorkspace};
use pdsvm::{gram_matrix, sparsity, thin_svd, PenaltyWeights, SparsityConstraint};
use pdsvm_bench::Fixture;
use std::hint::black_box;

const SHAPES: [(usize, usize); 3] = [(500, 50), (500, 500), (200, 1000)];

fn updates(c: &mut Criterion) {
    let mut g = c.benchmark_group("update");
    for (n, p) in SHAPES {
        let f = Fixture::synthetic(n, p, 0);
        let d = f.design();
        let con = SparsityConstraint::new(p / 10, p).unwrap();
        let w = PenaltyWeights::new(n, &con, 10.0);
        let svd = f.problem.svd().unwrap();
        for form in [UpdateForm::Loop, UpdateForm::Matrix] {
            let mut ws = MmWorkspace::new(svd, form);
            g.bench_with_input(BenchmarkId::new(format!("mm_{form:?}"), format!("{n}x{p}")), &f.beta0, |b, beta| {
                b.iter(|| mm_update(black_box(beta), &mut ws, d, &con, &w))
            });
        }
        let mut ws = SdWorkspace::new(d);
        g.bench_with_input(BenchmarkId::new("sd", format!("{n}x{p}")), &f.beta0, |b, beta| {
            b.iter(|| sd_update(black_box(beta), &mut ws, d, &con, &w))
        });
    }
    g.finish();
}

fn projection(c: &mut Criterion) {
    let mut g = c.benchmark_group("project");
    for p in [100, 10_000, 1_000_000] {
        let beta = DVector::from_fn(p + 1, |i, _| ((i * 7919) % 1013) as f64 - 506.0);
        let con = SparsityConstraint::new(p / 100 + 1, p).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(p), &beta, |b, beta| {
            b.iter(|| sparsity::project(black_box(beta), &con))
        });
    }
    g.finish();
}

fn decompositions(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    g.sample_size(10);
    for (n, p) in SHAPES {
        let f = Fixture::synthetic(n, p, 0);
        let x = f.design().x().clone();
        g.bench_with_input(BenchmarkId::new("thin_svd", format!("{n}x{p}")), &x, |b, x| {
            b.iter(|| thin_svd(black_box(x), 1e-12).unwrap())
        });
    }
    for n in [200, 800] {
        let pts = DMatrix::from_fn(n, 2, |i, j| ((i * 31 + j * 17) % 97) as f64 / 97.0);
        g.bench_with_input(BenchmarkId::new("gram", n), &pts, |b, x| b.iter(|| gram_matrix(black_box(x), 1.5)));
    }
    g.finish();
}

criterion_group!(benches, updates, projection, decompositions);
criterion_main!(benches);
