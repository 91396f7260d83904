use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use zib_core::concentration::{
    bernoulli_width, heavy_g, heavy_width, heavy_width_fixed, naive_size_proxy, nonzero_width_estimated,
    ConfidenceLevel, ProxyFamily, TailSpec,
};
use zib_core::distributions::{sample_clipped_beta, sample_clipped_normal, NoiseModel};
use zib_core::env::{CbEnv, CbEnvSpec, MabEnv, MabEnvSpec};
use zib_core::glm::{fit_linear, DesignMatrix, LinearEquation, Link, LinkPair};
use zib_core::harness::{run_experiment, ExperimentConfig};
use zib_core::mab::{
    ArmState, ClipMode, DirectTs, DirectTsParams, NaiveMode, NaiveUcb, NaiveUcbParams, Policy, ZiTs, ZiTsParams,
    ZiUcbHeavy, ZiUcbLight,
};
use zib_core::rng::SimRng;

fn conf(d: f64) -> ConfidenceLevel {
    ConfidenceLevel::new(d).unwrap()
}

fn all_policies(k: usize, horizon: u64) -> Vec<Box<dyn Policy>> {
    let delta = conf(4.0 / (horizon * horizon) as f64);
    let naive = |mode| NaiveUcbParams { mode, family: ProxyFamily::SubGaussian, size: 1.0, delta };
    vec![
        Box::new(ZiUcbLight::new(k, TailSpec::sub_weibull(2.0, 1.0).unwrap(), delta).unwrap()),
        Box::new(ZiUcbHeavy::new(k, TailSpec::heavy(0.5, 2.0).unwrap()).unwrap()),
        Box::new(ZiTs::new(k, ZiTsParams::new(horizon, 1.0)).unwrap()),
        Box::new(DirectTs::new(k, DirectTsParams::new(horizon)).unwrap()),
        Box::new(NaiveUcb::new(k, naive(NaiveMode::NonzeroParam)).unwrap()),
        Box::new(NaiveUcb::new(k, naive(NaiveMode::EmpiricalVariance)).unwrap()),
        Box::new(NaiveUcb::new(k, naive(NaiveMode::SolvedProxy)).unwrap()),
        Box::new(NaiveUcb::new(k, naive(NaiveMode::TrueProxy(vec![1.0; k]))).unwrap()),
    ]
}

fn assert_exact(arms: &[ArmState]) {
    for a in arms {
        if a.count > 0 {
            let exact = a.nonzero_count as f64 / a.count as f64;
            assert!((a.p_hat - exact).abs() <= 1e-12, "{} vs {exact}", a.p_hat);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clipped_draws_respect_their_clip(
        mean in -5.0f64..5.0,
        var in 0.01f64..10.0,
        clip in -5.0f64..5.0,
        a in 0.1f64..20.0,
        b in 0.1f64..20.0,
        clip_p in -0.5f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = SimRng::seed_from_u64(seed);
        for _ in 0..2000 {
            prop_assert!(sample_clipped_normal(mean, var, clip, &mut rng) >= clip);
            prop_assert!(sample_clipped_beta(a, b, clip_p, &mut rng) >= clip_p);
        }
    }

    #[test]
    fn widths_shrink_with_count_and_grow_with_confidence(
        n in 1u64..100_000,
        p in 0.01f64..1.0,
        delta in 1e-8f64..0.5,
        theta in 0.3f64..3.0,
        c in 0.2f64..5.0,
    ) {
        let tail = TailSpec::sub_weibull(theta, c).unwrap();
        let heavy = TailSpec::heavy(0.5, 1.7).unwrap();
        let (lo, hi) = (conf(delta), conf(delta / 2.0));
        let fns: [&dyn Fn(u64, ConfidenceLevel) -> f64; 3] = [
            &|n, d| bernoulli_width(n, d).unwrap(),
            &|n, d| nonzero_width_estimated(n, p, &tail, d).unwrap(),
            &|n, d| heavy_width_fixed(n, p, &heavy, d).unwrap(),
        ];
        for f in fns {
            prop_assert!(f(n + 1, lo) < f(n, lo));
            prop_assert!(f(n, hi) > f(n, lo));
        }
        prop_assert!(heavy_width(n + 1, 1000, &heavy).unwrap() < heavy_width(n, 1000, &heavy).unwrap());
    }

    #[test]
    fn p_hat_matches_the_ratio_after_any_pull_sequence(
        k in 2usize..6,
        seq in prop::collection::vec((0usize..6, any::<bool>(), -3.0f64..3.0), 1..300),
    ) {
        let horizon = 1000;
        let mut zi = ZiUcbLight::new(k, TailSpec::sub_weibull(2.0, 1.0).unwrap(), conf(0.01)).unwrap();
        let mut heavy = ZiUcbHeavy::new(k, TailSpec::heavy(0.5, 2.0).unwrap()).unwrap();
        let mut ts = ZiTs::new(k, ZiTsParams::new(horizon, 1.0)).unwrap();
        let naive_params = NaiveUcbParams {
            mode: NaiveMode::EmpiricalVariance,
            family: ProxyFamily::SubGaussian,
            size: 1.0,
            delta: conf(0.01),
        };
        let mut naive = NaiveUcb::new(k, naive_params).unwrap();
        for (t, &(arm, y, x)) in seq.iter().enumerate() {
            let arm = arm % k;
            let r = if y { x + 10.0 } else { 0.0 };
            zi.update(arm, r, y, t as u64 + 1);
            heavy.update(arm, r, y, t as u64 + 1);
            ts.update(arm, r, y, t as u64 + 1);
            naive.update(arm, r, y, t as u64 + 1);
        }
        assert_exact(zi.arms());
        assert_exact(heavy.arms());
        assert_exact(&ts.arms().iter().map(|a| a.stats.clone()).collect::<Vec<_>>());
        assert_exact(naive.arms());
    }

    #[test]
    fn gate_posterior_ignores_nonzero_values(
        seq in prop::collection::vec((0usize..3, any::<bool>(), 0.5f64..5.0, 0.5f64..5.0), 1..200),
    ) {
        let mut a = ZiTs::new(3, ZiTsParams::new(500, 1.0)).unwrap();
        let mut b = ZiTs::new(3, ZiTsParams::new(500, 1.0)).unwrap();
        for (t, &(arm, y, xa, xb)) in seq.iter().enumerate() {
            a.update(arm, if y { xa } else { 0.0 }, y, t as u64 + 1);
            b.update(arm, if y { xb } else { 0.0 }, y, t as u64 + 1);
        }
        for (x, y) in a.arms().iter().zip(b.arms()) {
            prop_assert_eq!((x.alpha, x.beta), (y.alpha, y.beta));
        }
    }

    #[test]
    fn selection_draws_stay_above_clips(
        seq in prop::collection::vec((0usize..4, any::<bool>(), 0.0f64..4.0), 4..200),
        seed in any::<u64>(),
    ) {
        let mut ts = ZiTs::new(4, ZiTsParams::new(2000, 1.0)).unwrap();
        for (t, &(arm, y, x)) in seq.iter().enumerate() {
            ts.update(arm, if y { x + 0.1 } else { 0.0 }, y, t as u64 + 1);
        }
        let mut rng = SimRng::seed_from_u64(seed);
        for (draw, arm) in ts.sample_all(&mut rng).iter().zip(ts.arms()) {
            prop_assert!(draw.0 >= arm.clip_p && draw.1 >= arm.clip_mu);
        }
    }

    #[test]
    fn design_matrix_stays_symmetric_positive_definite(
        d in 1usize..7,
        lambda in 0.1f64..3.0,
        rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 6), 0..700),
    ) {
        let mut m = DesignMatrix::new(d, lambda).unwrap();
        let mut explicit = DMatrix::identity(d, d) * lambda;
        for r in &rows {
            let z = DVector::from_iterator(d, r.iter().copied().take(d));
            m.add(&z).unwrap();
            explicit += &z * z.transpose();
        }
        let a = m.matrix();
        prop_assert!((a - a.transpose()).amax() == 0.0);
        prop_assert!((a - &explicit).amax() <= 1e-9 * (1.0 + explicit.amax()));
        prop_assert!(m.min_eigenvalue() >= lambda * (1.0 - 1e-9));
        let z = DVector::from_fn(d, |i, _| (i as f64 + 1.0).sin());
        let inv = explicit.try_inverse().unwrap();
        let direct = (z.transpose() * inv * &z)[(0, 0)].sqrt();
        prop_assert!((m.inv_norm(&z) - direct).abs() <= 1e-10 * (1.0 + direct));
    }

    #[test]
    fn heavy_inflation_decreases_in_p(eps in 0.05f64..1.0, p in 0.01f64..0.99) {
        prop_assert!(heavy_g(p + 0.01, eps).unwrap() < heavy_g(p, eps).unwrap());
    }
}

#[test]
fn every_policy_pulls_each_arm_once_first() {
    let k = 7;
    for mut policy in all_policies(k, 500) {
        let mut rng = SimRng::seed_from_u64(3);
        let picks: Vec<usize> = (1..=k as u64)
            .map(|t| {
                let a = policy.select(t, &mut rng);
                policy.update(a, 1.0, true, t);
                a
            })
            .collect();
        assert_eq!(picks, (0..k).collect::<Vec<_>>());
    }
}

#[test]
fn clip_cap_mode_bounds_draws_from_above() {
    let mut params = ZiTsParams::new(1000, 1.0);
    params.clip_mode = ClipMode::Cap;
    let mut ts = ZiTs::new(2, params).unwrap();
    for t in 1..=40 {
        ts.update((t % 2) as usize, if t % 3 == 0 { 2.0 } else { 0.0 }, t % 3 == 0, t);
    }
    let mut rng = SimRng::seed_from_u64(0);
    for _ in 0..200 {
        for (draw, arm) in ts.sample_all(&mut rng).iter().zip(ts.arms()) {
            assert!(draw.0 <= arm.clip_p && draw.1 <= arm.clip_mu);
        }
    }
}

#[test]
fn size_proxy_grows_with_the_nonzero_mean() {
    let t: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&mu| naive_size_proxy(mu, 0.5, 1.0, ProxyFamily::SubGaussian).unwrap().value)
        .collect();
    assert!(t[0] <= t[1] && t[1] <= t[2], "{t:?}");
    assert!(t[2] > 100.0);
}

#[test]
fn identity_fit_is_least_squares() {
    let mut rng = SimRng::seed_from_u64(11);
    for _ in 0..50 {
        let truth = DVector::from_fn(3, |_, _| rng.random_range(-0.4..0.4));
        let mut eq = LinearEquation::new(3);
        let mut x = DMatrix::zeros(50, 3);
        let mut y = DVector::zeros(50);
        for i in 0..50 {
            let z = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let r = z.dot(&truth) + 0.1 * rng.random_range(-1.0..1.0);
            eq.push(&z, r).unwrap();
            x.set_row(i, &z.transpose());
            y[i] = r;
        }
        let ls = x.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        assert!(ls.norm() < 1.0);
        let fit = fit_linear(&eq, 1.0, None);
        assert!((fit.estimate - ls).amax() <= 1e-8);
    }
}

#[test]
fn environments_are_deterministic_and_gates_are_probabilities() {
    let spec = MabEnvSpec {
        k: 6,
        p_range: (0.3, 0.35),
        mu_range: (1.0, 3.0),
        noise: NoiseModel::gaussian(1.0).unwrap(),
        horizon: 100,
    };
    let a = MabEnv::new(&spec, &mut SimRng::seed_from_u64(4)).unwrap();
    let b = MabEnv::new(&spec, &mut SimRng::seed_from_u64(4)).unwrap();
    assert_eq!(a.arms(), b.arms());

    for link in [Link::Probit, Link::Logistic] {
        let mut cb = CbEnvSpec::new(3, LinkPair::new(Link::Identity, link).unwrap(), NoiseModel::gaussian(1.0).unwrap(), 50);
        cb.k = 20;
        cb.d = 5;
        let e1 = CbEnv::new(&cb, &mut SimRng::seed_from_u64(9)).unwrap();
        let e2 = CbEnv::new(&cb, &mut SimRng::seed_from_u64(9)).unwrap();
        assert_eq!(e1, e2);
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..200 {
            let round = e1.step(&mut rng);
            for y in &round.features.psi_y {
                let g = e1.gate(y);
                assert!((0.0..=1.0).contains(&g));
            }
        }
    }
}

fn small_config(seed: u64, k: usize, extra: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!(
        "[experiment]\nkind = mab\nhorizon = 400\nreplications = 2\nmaster_seed = {seed}\n\
         [env]\nk = {k}\n[policy]\nname = zi_ucb\n[policy]\nname = zi_ts\n{extra}"
    ))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn regret_traces_decompose_and_never_decrease(seed in any::<u64>(), k in 2usize..8) {
        let res = run_experiment(&small_config(seed, k, "[policy]\nname = naive_ucb\n"), Some(2)).unwrap();
        for t in &res.traces {
            let total: f64 = t.pulls.iter().zip(&t.gaps).map(|(c, g)| *c as f64 * g).sum();
            prop_assert!((total - t.final_regret()).abs() <= 1e-9 * (1.0 + total));
            prop_assert!(t.points[0].1 >= 0.0);
            prop_assert!(t.points.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
        }
    }

    #[test]
    fn reruns_match_and_extra_policies_do_not_interfere(seed in any::<u64>()) {
        let base = small_config(seed, 4, "");
        let a = run_experiment(&base, Some(1)).unwrap();
        prop_assert_eq!(&a, &run_experiment(&base, Some(3)).unwrap());
        let more = run_experiment(&small_config(seed, 4, "[policy]\nname = direct_ts\n"), Some(2)).unwrap();
        for label in ["zi_ucb", "zi_ts"] {
            let x: Vec<_> = a.traces_of(label).collect();
            let y: Vec<_> = more.traces_of(label).collect();
            prop_assert_eq!(x, y);
        }
    }
}
