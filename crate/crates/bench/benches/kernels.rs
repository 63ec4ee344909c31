use criterion::{criterion_group, criterion_main, Criterion};
use expose_core::convexify::build_convexifier;
use expose_core::hermpoly::PolyBuilder;
use expose_core::onevar::{mobius_fuzz, WeldedMap};
use expose_core::peak::make_levi_peak;
use expose_core::{CVec, LocalDomain, C64};
use std::hint::black_box;

fn test_domain() -> LocalDomain {
    let rho = PolyBuilder::new(2).re_power(1, 1, 2.0).re_power(0, 2, 3.0).abs_sq(0, 1.0).abs_sq(1, 1.0).build().unwrap();
    LocalDomain::new(rho, CVec::zeros(2), 0.2).unwrap()
}

fn kernels(c: &mut Criterion) {
    let domain = test_domain();
    let zeta = CVec::zeros(2);
    let z = [C64::new(0.05, -0.02), C64::new(-0.01, 0.03)];
    c.bench_function("jet_eval", |b| b.iter(|| domain.rho.eval_jet(black_box(&z)).unwrap()));

    let peak = make_levi_peak(&domain, &zeta).unwrap();
    let (map, _) = build_convexifier(&domain, &zeta, &peak, 0.05).unwrap();
    let p = CVec::from_column_slice(&z);
    c.bench_function("convexifier_jacobian", |b| b.iter(|| map.eval_jacobian(black_box(&p))));
    c.bench_function("convexifier_plan", |b| b.iter(|| build_convexifier(&domain, &zeta, &peak, black_box(0.05)).unwrap()));

    let welded = WeldedMap::new(-2.0, 2.0, 0.15).unwrap();
    c.bench_function("welded_eval", |b| b.iter(|| welded.eval_deriv(black_box(C64::new(0.3, 0.4)))));

    c.bench_function("mobius_fuzz_64k", |b| b.iter(|| mobius_fuzz(black_box(1 << 16), 1)));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
