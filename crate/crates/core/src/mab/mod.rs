//! Zero-inflated multi-armed bandit policies and baselines.
//!
//! Arms are indexed from 0; rounds are counted from 1. Every policy pulls
//! arm `t - 1` in rounds `t = 1..=K` and updates its statistics on every
//! round, including those forced pulls.

mod direct_ts;
mod naive;
mod oracle;
mod ucb_heavy;
mod ucb_light;
mod zi_ts;

pub use direct_ts::{DirectTs, DirectTsParams};
pub use naive::{NaiveMode, NaiveUcb, NaiveUcbParams};
pub use oracle::FixedArm;
pub use ucb_heavy::ZiUcbHeavy;
pub use ucb_light::ZiUcbLight;
pub use zi_ts::{ClipMode, TsArm, ZiTs, ZiTsParams};

use rand::{Rng, RngCore};

/// Action-selection and update contract shared by all MAB policies.
pub trait Policy: Send {
    fn num_arms(&self) -> usize;

    /// Arm to pull at `round` (1-based). Must lie in `0..num_arms()`.
    fn select(&mut self, round: u64, rng: &mut dyn RngCore) -> usize;

    /// Feed back the reward `reward` and gate `nonzero` observed at `round`.
    fn update(&mut self, arm: usize, reward: f64, nonzero: bool, round: u64);
}

/// Sufficient statistics kept for each arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub count: u64,
    pub nonzero_count: u64,
    pub p_hat: f64,
    /// Mean of the non-zero rewards (trimmed mean for the heavy-tail policy).
    pub mu_hat: f64,
    pub nonzero_sum: f64,
}

impl Default for ArmState {
    fn default() -> Self {
        ArmState {
            count: 0,
            nonzero_count: 0,
            p_hat: 0.0,
            mu_hat: 0.0,
            nonzero_sum: 0.0,
        }
    }
}

impl ArmState {
    /// `c <- c + 1` then `p_hat <- p_hat + (y - p_hat) / c`.
    pub fn record_gate(&mut self, nonzero: bool) {
        self.count += 1;
        let y = if nonzero { 1.0 } else { 0.0 };
        self.p_hat += (y - self.p_hat) / self.count as f64;
    }

    /// Include a non-zero reward in the running mean.
    pub fn record_nonzero(&mut self, reward: f64) {
        self.nonzero_count += 1;
        self.nonzero_sum += reward;
        self.mu_hat = self.nonzero_sum / self.nonzero_count as f64;
    }
}

/// Index of a maximal entry; exact ties are broken uniformly at random.
///
/// NaN entries are never selected unless every entry is NaN.
pub fn argmax_random_tie(values: &[f64], rng: &mut dyn RngCore) -> usize {
    debug_assert!(!values.is_empty());
    let best = values
        .iter()
        .cloned()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(i, _)| i)
        .collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        n => ties[rng.random_range(0..n)],
    }
}

/// Forced initialization: round `t <= K` pulls arm `t - 1`.
pub(crate) fn forced_arm(round: u64, k: usize) -> Option<usize> {
    if round >= 1 && round <= k as u64 {
        Some(round as usize - 1)
    } else {
        None
    }
}
