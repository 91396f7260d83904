use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use std::hint::black_box;

use zib_core::concentration::{bernoulli_width, heavy_width, naive_size_proxy, nonzero_width_estimated, ProxyFamily};
use zib_core::glm::{fit_glm, DesignMatrix, Link, Observations};
use zib_core::mab::{ZiTs, ZiTsParams, ZiUcbLight};
use zib_core::{ConfidenceLevel, Policy, SimRng, TailSpec};

fn widths(c: &mut Criterion) {
    let delta = ConfidenceLevel::new(0.05).unwrap();
    let light = TailSpec::sub_weibull(2.0, 1.0).unwrap();
    let heavy = TailSpec::heavy(0.5, 2.0).unwrap();
    c.bench_function("bernoulli_width", |b| b.iter(|| bernoulli_width(black_box(1234), delta)));
    c.bench_function("nonzero_width_estimated", |b| {
        b.iter(|| nonzero_width_estimated(black_box(1234), 0.3, &light, delta))
    });
    c.bench_function("heavy_width", |b| b.iter(|| heavy_width(black_box(1234), 5000, &heavy)));
}

fn size_proxy(c: &mut Criterion) {
    c.bench_function("naive_size_proxy", |b| {
        b.iter(|| naive_size_proxy(black_box(2.5), 0.33, 1.0, ProxyFamily::SubGaussian))
    });
}

fn policy_step<P: Policy>(policy: &mut P, rng: &mut SimRng, round: u64) {
    let arm = policy.select(round, rng);
    let nonzero = rng.random::<f64>() < 0.3;
    let reward = if nonzero { 1.0 + rng.random::<f64>() } else { 0.0 };
    policy.update(arm, reward, nonzero, round);
}

fn policies(c: &mut Criterion) {
    let delta = ConfidenceLevel::new(0.05).unwrap();
    let tail = TailSpec::sub_weibull(2.0, 1.0).unwrap();
    c.bench_function("zi_ucb_1000_rounds_k10", |b| {
        b.iter_batched(
            || (ZiUcbLight::new(10, tail, delta).unwrap(), SimRng::seed_from_u64(1)),
            |(mut p, mut rng)| (1..=1000).for_each(|t| policy_step(&mut p, &mut rng, t)),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("zi_ts_1000_rounds_k10", |b| {
        b.iter_batched(
            || (ZiTs::new(10, ZiTsParams::new(1000, 1.0)).unwrap(), SimRng::seed_from_u64(1)),
            |(mut p, mut rng)| (1..=1000).for_each(|t| policy_step(&mut p, &mut rng, t)),
            BatchSize::SmallInput,
        )
    });
}

fn glm(c: &mut Criterion) {
    let mut rng = SimRng::seed_from_u64(2);
    let theta = DVector::from_fn(5, |_, _| rng.random_range(-0.4..0.4));
    let mut obs = Observations::new(5);
    let mut design = DesignMatrix::new(5, 1.0).unwrap();
    for _ in 0..500 {
        let x = DVector::from_fn(5, |_, _| rng.random_range(-0.45..0.45));
        let y = f64::from(u8::from(rng.random::<f64>() < Link::Probit.value(x.dot(&theta))));
        obs.push(&x, y).unwrap();
        design.add(&x).unwrap();
    }
    c.bench_function("fit_glm_probit_n500_d5", |b| b.iter(|| fit_glm(black_box(&obs), Link::Probit, 1.0, None)));
    let x = DVector::from_element(5, 0.2);
    c.bench_function("design_inv_norm_d5", |b| b.iter(|| design.inv_norm(black_box(&x))));
}

criterion_group!(benches, widths, size_proxy, policies, glm);
criterion_main!(benches);
