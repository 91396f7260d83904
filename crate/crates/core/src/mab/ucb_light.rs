use rand::RngCore;

use super::{argmax_random_tie, forced_arm, ArmState, Policy};
use crate::concentration::{bernoulli_width, nonzero_width_estimated, ConfidenceLevel, TailSpec};
use crate::error::{invalid, Result};

/// Product-index UCB for light (sub-Weibull) tails.
///
/// The index of arm `k` is `U_mu * U_p`, both initialized to 1. `U_p` is
/// refreshed on every pull; `U_mu` only when the reward is non-zero, after
/// `p_hat` has been updated, so the `p_hat` entering it is positive.
#[derive(Debug, Clone)]
pub struct ZiUcbLight {
    arms: Vec<ArmState>,
    u_mu: Vec<f64>,
    u_p: Vec<f64>,
    tail: TailSpec,
    delta: ConfidenceLevel,
}

impl ZiUcbLight {
    pub fn new(k: usize, tail: TailSpec, delta: ConfidenceLevel) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        if !matches!(tail, TailSpec::SubWeibull { .. }) {
            return Err(invalid("tail", "light-tail UCB needs a sub-Weibull tail"));
        }
        Ok(ZiUcbLight {
            arms: vec![ArmState::default(); k],
            u_mu: vec![1.0; k],
            u_p: vec![1.0; k],
            tail,
            delta,
        })
    }

    /// `delta = 4 / T^2`.
    pub fn default_delta(horizon: u64) -> Result<ConfidenceLevel> {
        let t = horizon.max(3) as f64;
        ConfidenceLevel::new(4.0 / (t * t))
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn indices(&self) -> Vec<f64> {
        self.u_mu.iter().zip(&self.u_p).map(|(m, p)| m * p).collect()
    }

    #[cfg(test)]
    pub(crate) fn set_bounds(&mut self, u_mu: Vec<f64>, u_p: Vec<f64>) {
        self.u_mu = u_mu;
        self.u_p = u_p;
    }
}

impl Policy for ZiUcbLight {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, round: u64, rng: &mut dyn RngCore) -> usize {
        if let Some(arm) = forced_arm(round, self.arms.len()) {
            return arm;
        }
        argmax_random_tie(&self.indices(), rng)
    }

    fn update(&mut self, arm: usize, reward: f64, nonzero: bool, _round: u64) {
        let s = &mut self.arms[arm];
        s.record_gate(nonzero);
        self.u_p[arm] = s.p_hat + bernoulli_width(s.count, self.delta).expect("count >= 1");
        if reward != 0.0 {
            s.record_nonzero(reward);
            // p_hat >= 1/count here unless the gate and reward disagree.
            let p = s.p_hat.max(1.0 / s.count as f64);
            self.u_mu[arm] =
                s.mu_hat + nonzero_width_estimated(s.count, p, &self.tail, self.delta).expect("valid width");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn policy(k: usize) -> ZiUcbLight {
        ZiUcbLight::new(
            k,
            TailSpec::sub_weibull(2.0, 1.0).unwrap(),
            ConfidenceLevel::new(0.01).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn forced_rounds_in_order() {
        let mut p = policy(5);
        let mut rng = SimRng::seed_from_u64(0);
        for t in 1..=5 {
            assert_eq!(p.select(t, &mut rng), t as usize - 1);
        }
    }

    #[test]
    fn initial_ties_uniform() {
        let mut p = policy(4);
        let mut rng = SimRng::seed_from_u64(1);
        let mut hits = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            hits[p.select(10, &mut rng)] += 1;
        }
        for h in hits {
            assert!((h as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn strict_argmax() {
        let mut p = policy(2);
        p.set_bounds(vec![2.0, 1.0], vec![1.0, 1.0]);
        let mut rng = SimRng::seed_from_u64(2);
        for _ in 0..100 {
            assert_eq!(p.select(3, &mut rng), 0);
        }
    }

    #[test]
    fn first_pull_updates() {
        let mut p = policy(2);
        p.update(0, 1.5, true, 1);
        assert_eq!(p.arms()[0].p_hat, 1.0);
        assert_eq!(p.arms()[0].mu_hat, 1.5);
        assert!(p.u_mu[0] > 1.5);
        p.update(1, 0.0, false, 2);
        assert_eq!(p.arms()[1].p_hat, 0.0);
        assert_eq!(p.u_mu[1], 1.0);
    }

    #[test]
    fn p_hat_ratio_after_sequence() {
        let mut p = policy(1);
        let gates = [true, false, false, true, true, false, true, false, false, false, true];
        for (i, &g) in gates.iter().enumerate() {
            p.update(0, if g { 0.7 } else { 0.0 }, g, i as u64 + 1);
        }
        let k = gates.iter().filter(|&&g| g).count();
        assert!((p.arms()[0].p_hat - k as f64 / gates.len() as f64).abs() < 1e-12);
    }
}
