use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ellq_core::bracket::Bracket;
use ellq_core::dybe::dybe_residual;
use ellq_core::modes::{ope_from_modes, spec};
use ellq_core::rmatrix::rbar;
use ellq_core::{make_params, run, DynParams, RunConfig, Suite, Truncation, C64};
use std::hint::black_box;

fn params(c: f64, n: usize) -> ellq_core::EllipticParams {
    make_params(C64::new(0.5, 0.0), 7.3, c, n).unwrap()
}

fn dyn_params(n: usize) -> DynParams {
    DynParams::new(n, (1..n).map(|j| C64::new(1.7 + 0.13 * j as f64, 0.0)).collect()).unwrap()
}

fn bench_bracket(c: &mut Criterion) {
    let b = Bracket::plain(&params(0.0, 2), &Truncation::default()).unwrap();
    let v = C64::new(0.37, 0.11);
    c.bench_function("bracket_eval", |bch| bch.iter(|| b.eval(black_box(v))));
}

fn bench_rbar(c: &mut Criterion) {
    let t = Truncation::default();
    let mut g = c.benchmark_group("rbar");
    for n in [2, 3, 4] {
        let (p, s) = (params(0.0, n), dyn_params(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| rbar(black_box(C64::new(0.31, 0.0)), &s, &p, &t).unwrap())
        });
    }
    g.finish();
}

fn bench_dybe(c: &mut Criterion) {
    let t = Truncation::default();
    let mut g = c.benchmark_group("dybe_point");
    for n in [2, 3] {
        let (p, s) = (params(0.0, n), dyn_params(n));
        let v = [0.11, -0.23, 0.37].map(|x| C64::new(x, 0.0));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| dybe_residual(v[0], v[1], v[2], &s, &p, &t).unwrap())
        });
    }
    g.finish();
}

fn bench_ope_oracle(c: &mut Criterion) {
    let p = params(1.0, 3);
    let t = Truncation::default();
    let a = spec::e(1, &p).unwrap();
    let b = spec::f(1, &p).unwrap();
    c.bench_function("ope_oracle_ef_400", |bch| {
        bch.iter(|| ope_from_modes(&a, &b, black_box(C64::new(0.2, 0.05)), &p, &t).unwrap())
    });
}

fn bench_suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("suite");
    g.sample_size(10);
    for suite in [Suite::Theta, Suite::Identities, Suite::Dybe] {
        let cfg = RunConfig { params: params(0.7, 3), points: None, seed: 42, tol: None, trunc: Truncation::default() };
        g.bench_function(suite.to_string(), |bch| bch.iter(|| run(suite, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_bracket, bench_rbar, bench_dybe, bench_ope_oracle, bench_suites);
criterion_main!(benches);
