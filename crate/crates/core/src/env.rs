//! Synthetic zero-inflated environments with exact regret oracles.

use nalgebra::DVector;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::distributions::{sample_zi, NoiseModel, ZiArm};
use crate::error::{invalid, Result, ZibError};
use crate::glm::{expected_reward, first_argmax, ArmFeatures, LinkPair};

#[derive(Debug, Clone, PartialEq)]
pub struct MabEnvSpec {
    pub k: usize,
    /// `p_k ~ Uniform[lo, hi]`.
    pub p_range: (f64, f64),
    /// `mu_k ~ Uniform[lo, hi]`.
    pub mu_range: (f64, f64),
    pub noise: NoiseModel,
    pub horizon: u64,
}

impl MabEnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        let (lo, hi) = self.p_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(invalid("p_range", format!("need 0 < lo <= hi <= 1, got ({lo}, {hi})")));
        }
        let (lo, hi) = self.mu_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid("mu_range", format!("need finite lo <= hi, got ({lo}, {hi})")));
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MabEnv {
    arms: Vec<ZiArm>,
    means: Vec<f64>,
    best: f64,
}

impl MabEnv {
    /// Draw `(p_k, mu_k)` arm by arm from `rng`.
    pub fn new(spec: &MabEnvSpec, rng: &mut dyn RngCore) -> Result<Self> {
        spec.validate()?;
        let mut arms = Vec::with_capacity(spec.k);
        for _ in 0..spec.k {
            let p = rng.random_range(spec.p_range.0..=spec.p_range.1);
            let mu = rng.random_range(spec.mu_range.0..=spec.mu_range.1);
            arms.push(ZiArm::new(p, mu, spec.noise.clone())?);
        }
        Self::from_arms(arms)
    }

    pub fn from_arms(arms: Vec<ZiArm>) -> Result<Self> {
        if arms.is_empty() {
            return Err(invalid("k", "need at least one arm"));
        }
        let means: Vec<f64> = arms.iter().map(ZiArm::mean_reward).collect();
        let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(MabEnv { arms, means, best })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ZiArm] {
        &self.arms
    }

    /// `r_k = mu_k p_k`.
    pub fn mean_rewards(&self) -> &[f64] {
        &self.means
    }

    pub fn best_mean(&self) -> f64 {
        self.best
    }

    pub fn best_arm(&self) -> usize {
        first_argmax(&self.means)
    }

    /// Expected regret of one pull of `arm`.
    pub fn gap(&self, arm: usize) -> f64 {
        self.best - self.means[arm]
    }

    pub fn pull(&self, arm: usize, rng: &mut dyn RngCore) -> (f64, bool) {
        sample_zi(&self.arms[arm], rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbEnvSpec {
    pub k: usize,
    pub d: usize,
    /// Nonzero entries of `theta` and of each context mean.
    pub sparsity: usize,
    pub links: LinkPair,
    pub noise: NoiseModel,
    pub horizon: u64,
}

impl CbEnvSpec {
    pub fn new(sparsity: usize, links: LinkPair, noise: NoiseModel, horizon: u64) -> Self {
        CbEnvSpec { k: 100, d: 10, sparsity, links, noise, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if !(1..=self.d).contains(&self.sparsity) {
            return Err(invalid("sparsity", format!("must lie in [1, {}], got {}", self.d, self.sparsity)));
        }
        self.noise.validate()
    }
}

/// One realized round: features per arm and their expected rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct CbRound {
    pub features: ArmFeatures,
    pub means: Vec<f64>,
    pub oracle_arm: usize,
}

impl CbRound {
    pub fn best_mean(&self) -> f64 {
        self.means[self.oracle_arm]
    }

    pub fn regret(&self, arm: usize) -> f64 {
        self.best_mean() - self.means[arm]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbEnv {
    pub beta: DVector<f64>,
    pub theta: DVector<f64>,
    pub context_means: Vec<DVector<f64>>,
    pub links: LinkPair,
    pub noise: NoiseModel,
    context_sd: f64,
}

fn sparse_uniform(d: usize, s: usize, rng: &mut dyn RngCore) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    for i in sample_indices(rng, d, s) {
        v[i] = rng.random::<f64>();
    }
    v
}

impl CbEnv {
    /// `beta ~ U[0,1]^d` normalized to unit norm; `theta` and every context
    /// mean are `s`-sparse with `U[0,1]` entries and left unnormalized.
    pub fn new(spec: &CbEnvSpec, rng: &mut dyn RngCore) -> Result<Self> {
        spec.validate()?;
        let mut beta = DVector::from_fn(spec.d, |_, _| rng.random::<f64>());
        let norm = beta.norm();
        if norm == 0.0 {
            return Err(ZibError::Config { field: "d".into(), reason: "drew a zero coefficient vector".into() });
        }
        beta /= norm;
        let theta = sparse_uniform(spec.d, spec.sparsity, rng);
        let context_means = (0..spec.k).map(|_| sparse_uniform(spec.d, spec.sparsity, rng)).collect();
        Self::from_parameters(beta, theta, context_means, spec.links, spec.noise.clone())
    }

    /// Context covariance is `I / (2K)`.
    pub fn from_parameters(
        beta: DVector<f64>,
        theta: DVector<f64>,
        context_means: Vec<DVector<f64>>,
        links: LinkPair,
        noise: NoiseModel,
    ) -> Result<Self> {
        let k = context_means.len();
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        let d = beta.len();
        for v in std::iter::once(&theta).chain(context_means.iter()) {
            if v.len() != d {
                return Err(ZibError::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        noise.validate()?;
        let context_sd = (1.0 / (2.0 * k as f64)).sqrt();
        Ok(CbEnv { beta, theta, context_means, links, noise, context_sd })
    }

    pub fn num_arms(&self) -> usize {
        self.context_means.len()
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn expected_reward(&self, psi_x: &DVector<f64>, psi_y: &DVector<f64>) -> f64 {
        expected_reward(&self.beta, &self.theta, &self.links, psi_x, psi_y)
    }

    pub fn gate(&self, psi_y: &DVector<f64>) -> f64 {
        self.links.h.value(psi_y.dot(&self.theta))
    }

    /// Fresh contexts `x_k ~ N(nu_k, I/(2K))` with `psi_x = x`, `psi_y = sin(x)`.
    pub fn step(&self, rng: &mut dyn RngCore) -> CbRound {
        let normal = Normal::new(0.0, self.context_sd).expect("positive standard deviation");
        let psi_x: Vec<DVector<f64>> = self
            .context_means
            .iter()
            .map(|nu| nu.map(|m| m + normal.sample(rng)))
            .collect();
        let psi_y: Vec<DVector<f64>> = psi_x.iter().map(|x| x.map(f64::sin)).collect();
        let means: Vec<f64> = psi_x.iter().zip(&psi_y).map(|(x, y)| self.expected_reward(x, y)).collect();
        let oracle_arm = first_argmax(&means);
        CbRound { features: ArmFeatures { psi_x, psi_y }, means, oracle_arm }
    }

    /// `(r, y)` for `arm`: `y ~ Bernoulli(h(psi_y^T theta))`, `r = y (g(psi_x^T beta) + noise)`.
    pub fn realize(&self, round: &CbRound, arm: usize, rng: &mut dyn RngCore) -> (f64, bool) {
        let (x, y) = (&round.features.psi_x[arm], &round.features.psi_y[arm]);
        let gate = self.gate(y);
        if rng.random::<f64>() < gate {
            (self.links.g.value(x.dot(&self.beta)) + self.noise.sample(rng), true)
        } else {
            (0.0, false)
        }
    }
}
