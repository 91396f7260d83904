use rand::RngCore;

use super::{argmax_random_tie, forced_arm, ArmState, Policy};
use crate::concentration::{heavy_trunc_level, heavy_width, TailSpec};
use crate::error::{invalid, Result};

/// Product-index UCB with a trimmed non-zero mean for heavy-tailed noise.
///
/// Each non-zero reward is kept or dropped at arrival, using the truncation
/// level computed from the arm's `p_hat` and count at that round. Dropped
/// rewards still count in the denominator of the trimmed mean. The gate
/// width is `sqrt(2 log(t^2) / c)`.
#[derive(Debug, Clone)]
pub struct ZiUcbHeavy {
    arms: Vec<ArmState>,
    trimmed_sum: Vec<f64>,
    u_mu: Vec<f64>,
    u_p: Vec<f64>,
    tail: TailSpec,
}

impl ZiUcbHeavy {
    pub fn new(k: usize, tail: TailSpec) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        if !matches!(tail, TailSpec::HeavyMoment { .. }) {
            return Err(invalid("tail", "heavy-tail UCB needs a moment tail"));
        }
        Ok(ZiUcbHeavy {
            arms: vec![ArmState::default(); k],
            trimmed_sum: vec![0.0; k],
            u_mu: vec![1.0; k],
            u_p: vec![1.0; k],
            tail,
        })
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn indices(&self) -> Vec<f64> {
        self.u_mu.iter().zip(&self.u_p).map(|(m, p)| m * p).collect()
    }
}

impl Policy for ZiUcbHeavy {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, round: u64, rng: &mut dyn RngCore) -> usize {
        if let Some(arm) = forced_arm(round, self.arms.len()) {
            return arm;
        }
        argmax_random_tie(&self.indices(), rng)
    }

    fn update(&mut self, arm: usize, reward: f64, nonzero: bool, round: u64) {
        let s = &mut self.arms[arm];
        s.record_gate(nonzero);
        let t = round.max(1) as f64;
        self.u_p[arm] = s.p_hat + (2.0 * (t * t).ln() / s.count as f64).sqrt();
        if reward != 0.0 {
            s.nonzero_count += 1;
            s.nonzero_sum += reward;
            let p = s.p_hat.max(1.0 / s.count as f64);
            let level = heavy_trunc_level(round, p, s.count, &self.tail).expect("valid level");
            if reward.abs() <= level {
                self.trimmed_sum[arm] += reward;
            }
            s.mu_hat = self.trimmed_sum[arm] / s.nonzero_count as f64;
            self.u_mu[arm] = s.mu_hat + heavy_width(s.count, round, &self.tail).expect("valid width");
        }
    }
}
