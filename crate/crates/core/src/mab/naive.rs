use rand::RngCore;

use super::{argmax_random_tie, forced_arm, ArmState, Policy};
use crate::concentration::{naive_size_proxy, ConfidenceLevel, ProxyFamily};
use crate::error::{invalid, Result};

const VARIANCE_FLOOR: f64 = 1e-12;

/// Source of the size parameter fed to a standard UCB on the raw reward.
#[derive(Debug, Clone, PartialEq)]
pub enum NaiveMode {
    /// The non-zero part's own size parameter.
    NonzeroParam,
    /// Running sample variance of the raw rewards.
    EmpiricalVariance,
    /// Proxy solved on the fly from `(mu_hat, p_hat)`.
    SolvedProxy,
    /// Proxy solved once per arm from the true parameters, supplied by the environment.
    TrueProxy(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveUcbParams {
    pub mode: NaiveMode,
    pub family: ProxyFamily,
    /// `sigma^2` (sub-Gaussian) or `lambda` (sub-exponential) of the non-zero noise.
    pub size: f64,
    pub delta: ConfidenceLevel,
}

#[derive(Debug, Clone, Default)]
struct RawStats {
    sum: f64,
    sum_sq: f64,
    cached: Option<(f64, f64, f64)>,
}

/// UCB on the raw reward `R` that ignores the zero-inflated structure.
///
/// Sub-Gaussian index: `R_bar + sqrt(2 tau^2 log(2/delta) / c)`.
/// Sub-exponential index: `R_bar + alpha^2 sqrt(2 log(2/delta)/c) + alpha log(2/delta)/c`.
#[derive(Debug, Clone)]
pub struct NaiveUcb {
    arms: Vec<ArmState>,
    raw: Vec<RawStats>,
    params: NaiveUcbParams,
}

impl NaiveUcb {
    pub fn new(k: usize, params: NaiveUcbParams) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        if !(params.size > 0.0) {
            return Err(invalid("size", "must be positive"));
        }
        if let NaiveMode::TrueProxy(ref v) = params.mode {
            if v.len() != k {
                return Err(invalid("true_proxy", format!("expected {k} values, got {}", v.len())));
            }
        }
        Ok(NaiveUcb {
            arms: vec![ArmState::default(); k],
            raw: vec![RawStats::default(); k],
            params,
        })
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    /// `tau^2` (or `alpha^2`) currently used for `arm`.
    pub fn proxy(&mut self, arm: usize) -> f64 {
        let s = &self.arms[arm];
        let base = match self.params.family {
            ProxyFamily::SubGaussian => self.params.size,
            ProxyFamily::SubExponential => self.params.size * self.params.size,
        };
        match &self.params.mode {
            NaiveMode::NonzeroParam => base,
            NaiveMode::TrueProxy(v) => v[arm],
            NaiveMode::EmpiricalVariance => {
                let r = &self.raw[arm];
                if s.count < 2 {
                    VARIANCE_FLOOR
                } else {
                    let n = s.count as f64;
                    let mean = r.sum / n;
                    ((r.sum_sq - n * mean * mean) / (n - 1.0)).max(VARIANCE_FLOOR)
                }
            }
            NaiveMode::SolvedProxy => {
                let (mu, p) = (s.mu_hat, s.p_hat);
                if let Some((cm, cp, v)) = self.raw[arm].cached {
                    if cm == mu && cp == p {
                        return v;
                    }
                }
                let v = naive_size_proxy(mu, p, self.params.size, self.params.family)
                    .map(|t| t.value)
                    .unwrap_or(base)
                    .max(VARIANCE_FLOOR);
                self.raw[arm].cached = Some((mu, p, v));
                v
            }
        }
    }

    pub fn index(&mut self, arm: usize) -> f64 {
        let c = self.arms[arm].count.max(1) as f64;
        let mean = self.raw[arm].sum / c;
        let log_term = (2.0 / self.params.delta.delta()).ln();
        let proxy = self.proxy(arm);
        match self.params.family {
            ProxyFamily::SubGaussian => mean + (2.0 * proxy * log_term / c).sqrt(),
            ProxyFamily::SubExponential => {
                mean + proxy * (2.0 * log_term / c).sqrt() + proxy.sqrt() * log_term / c
            }
        }
    }
}

impl Policy for NaiveUcb {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, round: u64, rng: &mut dyn RngCore) -> usize {
        if let Some(arm) = forced_arm(round, self.arms.len()) {
            return arm;
        }
        let idx: Vec<f64> = (0..self.arms.len()).map(|a| self.index(a)).collect();
        argmax_random_tie(&idx, rng)
    }

    fn update(&mut self, arm: usize, reward: f64, nonzero: bool, _round: u64) {
        let s = &mut self.arms[arm];
        s.record_gate(nonzero);
        if reward != 0.0 {
            s.record_nonzero(reward);
        }
        let r = &mut self.raw[arm];
        r.sum += reward;
        r.sum_sq += reward * reward;
    }
}
