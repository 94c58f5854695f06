use std::hint::black_box;

use condrisk::bvm::AtomicKind;
use condrisk::duality::{fenchel, verify_representation, DualSearchConfig, FenchelMethod};
use condrisk::formula::evaluate;
use condrisk::CondRiskMeasure;
use condrisk_bench::{density, formula, measures, name_pair, payoffs, space, universe};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn risk_evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for (n, m) in [(8, 3), (64, 8)] {
        let s = space(n, m);
        let x = payoffs(&s, 1).remove(0);
        for rho in measures(&s) {
            group.bench_with_input(BenchmarkId::new(rho.label(), n), &x, |b, x| {
                b.iter(|| rho.evaluate(black_box(x)).unwrap())
            });
        }
    }
    group.finish();
}

fn penalties(c: &mut Criterion) {
    let s = space(8, 3);
    let y = density(&s);
    let mut group = c.benchmark_group("fenchel");
    for rho in measures(&s) {
        if rho.closed_form_penalty(y.as_rv()).is_some() {
            group.bench_function(BenchmarkId::new("closed_form", rho.label()), |b| {
                b.iter(|| fenchel(&rho, black_box(&y), FenchelMethod::ClosedForm).unwrap())
            });
        }
        group.bench_function(BenchmarkId::new("grid_refine", rho.label()), |b| {
            b.iter(|| fenchel(&rho, black_box(&y), FenchelMethod::GridRefine).unwrap())
        });
    }
    group.finish();
}

fn representation(c: &mut Criterion) {
    let s = space(8, 3);
    let xs = payoffs(&s, 4);
    let rho = measures(&s).remove(2);
    c.bench_function("represent entropic 4 payoffs", |b| {
        b.iter(|| verify_representation(&rho, black_box(&xs), 1e-6, &DualSearchConfig::default()).unwrap())
    });
}

fn names(c: &mut Criterion) {
    let mut group = c.benchmark_group("bvm");
    group.bench_function("truth_atomic eq, fresh universe", |b| {
        b.iter(|| {
            let u = universe(3);
            let (x, y) = name_pair(&u);
            u.truth_atomic(x, y, AtomicKind::Eq).unwrap()
        })
    });
    let u = universe(3);
    let (x, y) = name_pair(&u);
    group.bench_function("truth_atomic eq, memoized", |b| {
        b.iter(|| u.truth_atomic(black_box(x), black_box(y), AtomicKind::Eq).unwrap())
    });
    let (f, mut env) = formula();
    env.insert("u".into(), x);
    env.insert("v".into(), y);
    group.bench_function("formula depth 2", |b| {
        b.iter(|| evaluate(&u, black_box(&f), &env).unwrap())
    });
    group.finish();
}

criterion_group!(benches, risk_evaluate, penalties, representation, names);
criterion_main!(benches);
