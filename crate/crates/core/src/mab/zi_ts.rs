use rand::RngCore;

use super::{argmax_random_tie, forced_arm, ArmState, Policy};
use crate::distributions::{sample_beta, sample_clipped_beta, sample_clipped_normal, CLIP_ALL, CLIP_NONE};
use crate::error::{invalid, Result};

/// Tuning of the clipped-posterior Thompson sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZiTsParams {
    pub horizon: u64,
    /// Sub-Gaussian proxy of the non-zero noise.
    pub sigma2: f64,
    /// Clip inflation, at least 4.
    pub gamma: f64,
    /// Posterior variance deflation in (1/2, 1).
    pub rho: f64,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub prior_v: f64,
    pub clip_mode: ClipMode,
}

/// How a posterior draw is combined with its clip value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClipMode {
    /// `max(draw, clip)`.
    #[default]
    Floor,
    /// `min(draw, clip)`: the clip caps optimistic draws.
    Cap,
}

impl ZiTsParams {
    pub fn new(horizon: u64, sigma2: f64) -> Self {
        ZiTsParams {
            horizon,
            sigma2,
            gamma: 4.0,
            rho: 0.75,
            prior_alpha: 1.0,
            prior_beta: 1.0,
            prior_v: 0.0,
            clip_mode: ClipMode::Floor,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        if !(self.sigma2 > 0.0) {
            return Err(invalid("sigma2", "must be positive"));
        }
        if !(self.gamma >= 4.0) {
            return Err(invalid("gamma", format!("must be at least 4, got {}", self.gamma)));
        }
        if !(self.rho > 0.5 && self.rho < 1.0) {
            return Err(invalid("rho", format!("must lie in (1/2, 1), got {}", self.rho)));
        }
        if !(self.prior_alpha > 0.0 && self.prior_beta > 0.0) {
            return Err(invalid("prior", "Beta prior parameters must be positive"));
        }
        Ok(())
    }
}

/// Per-arm posterior state.
#[derive(Debug, Clone, PartialEq)]
pub struct TsArm {
    pub stats: ArmState,
    pub alpha: f64,
    pub beta: f64,
    /// Centre of the Gaussian posterior on the non-zero mean.
    pub v: f64,
    pub clip_p: f64,
    pub clip_mu: f64,
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// Thompson sampling with a clipped Beta posterior on the gate and a clipped
/// Gaussian posterior on the non-zero mean; the action maximizes the product
/// of the two draws.
///
/// The count is incremented before the `p_hat` recurrence, so `p_hat` is
/// always the ratio of non-zero pulls to pulls. Until an arm has produced a
/// non-zero reward, its Gaussian variance uses `max(p_hat, 1/c)` in place of
/// `p_hat` and its clip keeps the initial value 1.
#[derive(Debug, Clone)]
pub struct ZiTs {
    arms: Vec<TsArm>,
    params: ZiTsParams,
}

impl ZiTs {
    pub fn new(k: usize, params: ZiTsParams) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        params.validate()?;
        let arm = TsArm {
            stats: ArmState::default(),
            alpha: params.prior_alpha,
            beta: params.prior_beta,
            v: params.prior_v,
            clip_p: if params.clip_mode == ClipMode::Cap { 1.0 } else { 0.0 },
            clip_mu: if params.clip_mode == ClipMode::Cap { CLIP_ALL } else { 1.0 },
        };
        Ok(ZiTs {
            arms: vec![arm; k],
            params,
        })
    }

    pub fn arms(&self) -> &[TsArm] {
        &self.arms
    }

    pub fn arms_mut(&mut self) -> &mut [TsArm] {
        &mut self.arms
    }

    /// Clip on the gate draw: `p_hat + sqrt(gamma/(4c) log+(T/(4cK)))`.
    pub fn gate_clip(p_hat: f64, count: u64, horizon: u64, k: usize, gamma: f64) -> f64 {
        let c = count as f64;
        p_hat + (gamma / (4.0 * c) * log_plus(horizon as f64 / (4.0 * c * k as f64))).sqrt()
    }

    /// Clip on the non-zero mean draw.
    pub fn mean_clip(mu_hat: f64, p_hat: f64, count: u64, horizon: u64, k: usize, gamma: f64, sigma2: f64) -> f64 {
        let c = count as f64;
        let t = horizon as f64;
        let inflate = 1.0 + 1.0 / (1.0 / (c * t).sqrt()).ln_1p();
        let scale = inflate * sigma2 / (p_hat * p_hat * c);
        mu_hat + (4.0 * gamma * scale).sqrt() * log_plus(4.0 * scale * t / k as f64).sqrt()
    }

    /// Draw `(p_tilde, mu_tilde)` for every arm.
    pub fn sample_all(&self, rng: &mut dyn RngCore) -> Vec<(f64, f64)> {
        self.arms
            .iter()
            .map(|a| {
                let c = a.stats.count.max(1) as f64;
                let p_eff = a.stats.p_hat.max(1.0 / c);
                let var = 2.0 * self.params.sigma2 / (self.params.rho * c * p_eff);
                match self.params.clip_mode {
                    ClipMode::Floor => (
                        sample_clipped_beta(a.alpha, a.beta, a.clip_p, rng),
                        sample_clipped_normal(a.v, var, a.clip_mu, rng),
                    ),
                    ClipMode::Cap => (
                        sample_beta(a.alpha, a.beta, rng).min(a.clip_p.max(0.0)),
                        sample_clipped_normal(a.v, var, CLIP_NONE, rng).min(a.clip_mu),
                    ),
                }
            })
            .collect()
    }
}

impl Policy for ZiTs {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, round: u64, rng: &mut dyn RngCore) -> usize {
        if let Some(arm) = forced_arm(round, self.arms.len()) {
            return arm;
        }
        let products: Vec<f64> = self.sample_all(rng).into_iter().map(|(p, m)| p * m).collect();
        argmax_random_tie(&products, rng)
    }

    fn update(&mut self, arm: usize, reward: f64, nonzero: bool, _round: u64) {
        let k = self.arms.len();
        let prm = self.params;
        let a = &mut self.arms[arm];
        let y = if nonzero { 1.0 } else { 0.0 };
        a.alpha += y;
        a.beta += 1.0 - y;
        a.stats.record_gate(nonzero);
        a.clip_p = Self::gate_clip(a.stats.p_hat, a.stats.count, prm.horizon, k, prm.gamma);
        if reward != 0.0 {
            a.stats.record_nonzero(reward);
            a.v = a.stats.mu_hat;
            let p = a.stats.p_hat.max(1.0 / a.stats.count as f64);
            a.clip_mu = Self::mean_clip(a.stats.mu_hat, p, a.stats.count, prm.horizon, k, prm.gamma, prm.sigma2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    #[test]
    fn gate_clip_vanishes_at_log_zero() {
        // T / (4 c K) = 1
        let (t, k, c) = (400u64, 5usize, 20u64);
        assert_eq!(ZiTs::gate_clip(0.3, c, t, k, 4.0), 0.3);
    }

    #[test]
    fn inflation_factor_exceeds_one() {
        for c in [1u64, 10, 1000] {
            for t in [10u64, 100_000] {
                let f = 1.0 + 1.0 / (1.0 / ((c * t) as f64).sqrt()).ln_1p();
                assert!(f > 1.0);
            }
        }
    }

    #[test]
    fn beta_posterior_counts() {
        let mut ts = ZiTs::new(2, ZiTsParams::new(1000, 1.0)).unwrap();
        ts.update(0, 2.0, true, 1);
        assert_eq!(ts.arms()[0].alpha, 2.0);
        assert_eq!(ts.arms()[0].beta, 1.0);
        ts.update(0, 0.0, false, 2);
        assert_eq!(ts.arms()[0].alpha, 2.0);
        assert_eq!(ts.arms()[0].beta, 2.0);
        assert_eq!(ts.arms()[0].v, 2.0);
    }

    #[test]
    fn beta_posterior_ignores_nonzero_values() {
        let gates = [true, false, true, true, false, false, true];
        let run = |scale: f64| {
            let mut ts = ZiTs::new(1, ZiTsParams::new(1000, 1.0)).unwrap();
            for (i, &g) in gates.iter().enumerate() {
                ts.update(0, if g { scale * (i as f64 + 1.0) } else { 0.0 }, g, i as u64 + 1);
            }
            (ts.arms()[0].alpha, ts.arms()[0].beta, ts.arms()[0].v)
        };
        let (a1, b1, v1) = run(1.0);
        let (a2, b2, v2) = run(-3.0);
        assert_eq!((a1, b1), (a2, b2));
        assert_ne!(v1, v2);
    }

    #[test]
    fn clipped_to_deterministic_argmax() {
        let mut ts = ZiTs::new(3, ZiTsParams::new(1000, 1.0)).unwrap();
        for (i, a) in ts.arms_mut().iter_mut().enumerate() {
            a.stats.count = 5;
            a.clip_p = CLIP_ALL;
            a.clip_mu = [1e6, 3e6, 2e6][i];
        }
        let mut rng = SimRng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(ts.select(10, &mut rng), 1);
        }
    }

    #[test]
    fn single_arm() {
        let mut ts = ZiTs::new(1, ZiTsParams::new(100, 1.0)).unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        ts.update(0, 1.0, true, 1);
        for t in 2..50 {
            assert_eq!(ts.select(t, &mut rng), 0);
        }
    }

    #[test]
    fn symmetric_arms_split_evenly() {
        let mut ts = ZiTs::new(2, ZiTsParams::new(1000, 1.0)).unwrap();
        for a in ts.arms_mut() {
            a.stats.count = 10;
            a.stats.p_hat = 0.5;
            a.clip_p = 0.0;
            a.clip_mu = crate::distributions::CLIP_NONE;
            a.v = 1.0;
        }
        let mut rng = SimRng::seed_from_u64(2);
        let n = 10_000;
        let hits = (0..n).filter(|_| ts.select(10, &mut rng) == 0).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn draws_respect_clips() {
        let mut ts = ZiTs::new(4, ZiTsParams::new(5000, 1.0)).unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        for t in 1..=200u64 {
            let arm = ts.select(t, &mut rng);
            let nz = t % 3 == 0;
            ts.update(arm, if nz { 1.0 + (t % 7) as f64 / 7.0 } else { 0.0 }, nz, t);
            for (a, (p, m)) in ts.arms().iter().zip(ts.sample_all(&mut rng)) {
                assert!(p >= a.clip_p);
                assert!(m >= a.clip_mu);
            }
        }
    }

    #[test]
    fn rejects_bad_tuning() {
        let mut p = ZiTsParams::new(10, 1.0);
        p.gamma = 3.0;
        assert!(ZiTs::new(2, p).is_err());
        let mut p = ZiTsParams::new(10, 1.0);
        p.rho = 0.5;
        assert!(ZiTs::new(2, p).is_err());
    }
}
