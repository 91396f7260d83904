use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::design::DesignMatrix;
use super::fit::{fit_glm, fit_linear, LinearEquation, Observations};
use super::integrated::IntegratedProblem;
use super::link::{Link, LinkPair};
use super::radii::RadiusSchedule;
use crate::error::{invalid, Result};
use crate::mab::argmax_random_tie;

/// Per-arm feature vectors offered in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmFeatures {
    pub psi_x: Vec<DVector<f64>>,
    pub psi_y: Vec<DVector<f64>>,
}

impl ArmFeatures {
    pub fn num_arms(&self) -> usize {
        self.psi_x.len()
    }
}

/// Action-selection and update contract shared by all contextual policies.
pub trait ContextualPolicy: Send {
    fn select(&mut self, round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize;

    fn update(&mut self, round: u64, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64, nonzero: bool);
}

/// Tuning shared by the contextual policies.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmParams {
    pub links: LinkPair,
    /// Sub-Gaussian proxy standard deviation of the noise.
    pub sigma: f64,
    pub lambda_v: f64,
    pub lambda_u: f64,
    pub delta: f64,
    pub horizon: u64,
    /// Rounds `1..=random_period` are played uniformly at random.
    pub random_period: u64,
    /// Radius of the parameter domain.
    pub radius: f64,
}

impl GlmParams {
    pub fn schedule(&self, d: usize, q: usize) -> RadiusSchedule {
        RadiusSchedule {
            sigma: self.sigma,
            kappa_g: self.links.kappa_g,
            kappa_h: self.links.kappa_h,
            d,
            q,
            lambda_v: self.lambda_v,
            lambda_u: self.lambda_u,
            delta: self.delta,
            horizon: self.horizon,
        }
    }

    fn validate(&self, k: usize, d: usize, q: usize) -> Result<RadiusSchedule> {
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid("radius", format!("must be positive, got {}", self.radius)));
        }
        let s = self.schedule(d, q);
        s.validate()?;
        Ok(s)
    }

    /// Posterior scale of the misspecified and integrated Thompson baselines,
    /// `24 sigma^2 d log(1/delta) log(T) / K^2`.
    pub fn baseline_phi2(&self, k: usize, d: usize) -> f64 {
        let eps = 1.0 / (self.horizon as f64).ln().max(f64::MIN_POSITIVE);
        24.0 * self.sigma * self.sigma * d as f64 / ((k * k) as f64 * eps) * (1.0 / self.delta).ln()
    }
}

fn check_arms(arms: &ArmFeatures, k: usize, d: usize, q: usize) {
    assert_eq!(arms.num_arms(), k, "arm count");
    debug_assert!(arms.psi_x.iter().all(|v| v.len() == d));
    debug_assert!(arms.psi_y.iter().all(|v| v.len() == q));
}

enum BetaData {
    Linear(LinearEquation),
    Raw(Observations),
}

/// Product-model state: separate fits and design matrices for the gate and
/// the non-zero part.
pub struct GlmState {
    pub v_mat: DesignMatrix,
    pub u_mat: DesignMatrix,
    pub beta_hat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    beta_data: BetaData,
    gate_data: Observations,
    g: Link,
    h: Link,
    radius: f64,
    stale: bool,
}

impl GlmState {
    pub fn new(d: usize, q: usize, params: &GlmParams) -> Result<Self> {
        let beta_data = match params.links.g {
            Link::Identity => BetaData::Linear(LinearEquation::new(d)),
            _ => BetaData::Raw(Observations::new(d)),
        };
        Ok(GlmState {
            v_mat: DesignMatrix::new(d, params.lambda_v)?,
            u_mat: DesignMatrix::new(q, params.lambda_u)?,
            beta_hat: DVector::zeros(d),
            theta_hat: DVector::zeros(q),
            beta_data,
            gate_data: Observations::new(q),
            g: params.links.g,
            h: params.links.h,
            radius: params.radius,
            stale: false,
        })
    }

    pub fn observe(&mut self, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64, nonzero: bool) -> Result<()> {
        self.u_mat.add(psi_y)?;
        self.gate_data.push(psi_y, if nonzero { 1.0 } else { 0.0 })?;
        if nonzero {
            self.v_mat.add(psi_x)?;
            match &mut self.beta_data {
                BetaData::Linear(eq) => eq.push(psi_x, reward)?,
                BetaData::Raw(obs) => obs.push(psi_x, reward)?,
            }
        }
        self.stale = true;
        Ok(())
    }

    /// Solve both estimating equations, warm-started at the current estimates.
    pub fn refit(&mut self) {
        if !self.stale {
            return;
        }
        let beta = match &self.beta_data {
            BetaData::Linear(eq) => fit_linear(eq, self.radius, Some(&self.beta_hat)),
            BetaData::Raw(obs) => fit_glm(obs, self.g, self.radius, Some(&self.beta_hat)),
        };
        self.beta_hat = beta.estimate;
        self.theta_hat = fit_glm(&self.gate_data, self.h, self.radius, Some(&self.theta_hat)).estimate;
        self.stale = false;
    }
}

/// `[psi_x^T beta + rho_x ||psi_x||_{V^-1}] [psi_y^T theta + rho_y ||psi_y||_{U^-1}]`.
pub fn ucb_score(
    psi_x: &DVector<f64>,
    psi_y: &DVector<f64>,
    state: &GlmState,
    rho_x: f64,
    rho_y: f64,
) -> f64 {
    let x_part = psi_x.dot(&state.beta_hat) + rho_x * state.v_mat.inv_norm(psi_x);
    let y_part = psi_y.dot(&state.theta_hat) + rho_y * state.u_mat.inv_norm(psi_y);
    x_part * y_part
}

fn uniform(k: usize, rng: &mut dyn RngCore) -> usize {
    rng.random_range(0..k)
}

/// Zero-inflated GLM UCB.
pub struct ZiGlmUcb {
    k: usize,
    params: GlmParams,
    schedule: RadiusSchedule,
    pub state: GlmState,
}

impl ZiGlmUcb {
    pub fn new(k: usize, d: usize, q: usize, params: GlmParams) -> Result<Self> {
        let schedule = params.validate(k, d, q)?;
        let state = GlmState::new(d, q, &params)?;
        Ok(ZiGlmUcb { k, params, schedule, state })
    }
}

impl ContextualPolicy for ZiGlmUcb {
    fn select(&mut self, round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize {
        check_arms(arms, self.k, self.schedule.d, self.schedule.q);
        if round <= self.params.random_period {
            return uniform(self.k, rng);
        }
        self.state.refit();
        let (rx, ry) = (self.schedule.rho_x(round), self.schedule.rho_y(round));
        let scores: Vec<f64> = arms
            .psi_x
            .iter()
            .zip(&arms.psi_y)
            .map(|(x, y)| ucb_score(x, y, &self.state, rx, ry))
            .collect();
        argmax_random_tie(&scores, rng)
    }

    fn update(&mut self, _round: u64, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64, nonzero: bool) {
        self.state.observe(psi_x, psi_y, reward, nonzero).expect("feature dimensions checked at select");
    }
}

/// Zero-inflated GLM Thompson sampling: one parameter draw per round.
pub struct ZiGlmTs {
    k: usize,
    params: GlmParams,
    schedule: RadiusSchedule,
    pub state: GlmState,
}

impl ZiGlmTs {
    pub fn new(k: usize, d: usize, q: usize, params: GlmParams) -> Result<Self> {
        let schedule = params.validate(k, d, q)?;
        let state = GlmState::new(d, q, &params)?;
        Ok(ZiGlmTs { k, params, schedule, state })
    }

    /// Draw `(beta~, theta~)` around the current fit.
    pub fn sample(&mut self, rng: &mut dyn RngCore) -> (DVector<f64>, DVector<f64>) {
        self.state.refit();
        let b = self.state.v_mat.sample_gaussian(&self.state.beta_hat, self.schedule.varrho_x(), rng);
        let t = self.state.u_mat.sample_gaussian(&self.state.theta_hat, self.schedule.varrho_y(), rng);
        (b, t)
    }
}

impl ContextualPolicy for ZiGlmTs {
    fn select(&mut self, round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize {
        check_arms(arms, self.k, self.schedule.d, self.schedule.q);
        if round <= self.params.random_period {
            return uniform(self.k, rng);
        }
        let (b, t) = self.sample(rng);
        let scores: Vec<f64> = arms.psi_x.iter().zip(&arms.psi_y).map(|(x, y)| x.dot(&b) * y.dot(&t)).collect();
        argmax_random_tie(&scores, rng)
    }

    fn update(&mut self, _round: u64, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64, nonzero: bool) {
        self.state.observe(psi_x, psi_y, reward, nonzero).expect("feature dimensions checked at select");
    }
}

/// Ridge regression of the raw reward on `psi_x`, ignoring the gate.
pub struct NaiveLinear {
    pub u_naive: DesignMatrix,
    moment: DVector<f64>,
}

impl NaiveLinear {
    pub fn new(d: usize, lambda: f64) -> Result<Self> {
        Ok(NaiveLinear { u_naive: DesignMatrix::new(d, lambda)?, moment: DVector::zeros(d) })
    }

    pub fn observe(&mut self, psi_x: &DVector<f64>, reward: f64) -> Result<()> {
        self.u_naive.add(psi_x)?;
        self.moment.axpy(reward, psi_x, 1.0);
        Ok(())
    }

    pub fn beta_hat(&self) -> DVector<f64> {
        self.u_naive.solve(&self.moment)
    }
}

/// Misspecified LinUCB: `psi^T beta_naive + sqrt(rho_x) ||psi||_{U^-1}`.
pub struct MisspecifiedLinUcb {
    k: usize,
    schedule: RadiusSchedule,
    pub model: NaiveLinear,
}

impl MisspecifiedLinUcb {
    pub fn new(k: usize, d: usize, q: usize, params: GlmParams) -> Result<Self> {
        let schedule = params.validate(k, d, q)?;
        Ok(MisspecifiedLinUcb { k, schedule, model: NaiveLinear::new(d, params.lambda_u)? })
    }
}

impl ContextualPolicy for MisspecifiedLinUcb {
    fn select(&mut self, round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize {
        check_arms(arms, self.k, self.schedule.d, self.schedule.q);
        let beta = self.model.beta_hat();
        let width = self.schedule.rho_x(round).sqrt();
        let scores: Vec<f64> = arms
            .psi_x
            .iter()
            .map(|x| x.dot(&beta) + width * self.model.u_naive.inv_norm(x))
            .collect();
        argmax_random_tie(&scores, rng)
    }

    fn update(&mut self, _round: u64, psi_x: &DVector<f64>, _psi_y: &DVector<f64>, reward: f64, _nonzero: bool) {
        self.model.observe(psi_x, reward).expect("feature dimensions checked at select");
    }
}

/// Misspecified LinTS: `beta~ ~ N(beta_naive, phi^2 U^-1)`.
pub struct MisspecifiedLinTs {
    k: usize,
    d: usize,
    q: usize,
    phi: f64,
    pub model: NaiveLinear,
}

impl MisspecifiedLinTs {
    pub fn new(k: usize, d: usize, q: usize, params: GlmParams) -> Result<Self> {
        params.validate(k, d, q)?;
        let phi = params.baseline_phi2(k, d).sqrt();
        Ok(MisspecifiedLinTs { k, d, q, phi, model: NaiveLinear::new(d, params.lambda_u)? })
    }
}

impl ContextualPolicy for MisspecifiedLinTs {
    fn select(&mut self, _round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize {
        check_arms(arms, self.k, self.d, self.q);
        let beta = self.model.u_naive.sample_gaussian(&self.model.beta_hat(), self.phi, rng);
        let scores: Vec<f64> = arms.psi_x.iter().map(|x| x.dot(&beta)).collect();
        argmax_random_tie(&scores, rng)
    }

    fn update(&mut self, _round: u64, psi_x: &DVector<f64>, _psi_y: &DVector<f64>, reward: f64, _nonzero: bool) {
        self.model.observe(psi_x, reward).expect("feature dimensions checked at select");
    }
}

/// Outer iterations of the warm-started joint fit per round.
const INTEGRATED_ITERS: usize = 3;

/// Joint estimate of `(beta, theta)` with a stacked design matrix.
pub struct IntegratedModel {
    d: usize,
    h: Link,
    ridge: f64,
    radius: f64,
    pub w_mat: DesignMatrix,
    history: Observations,
    pub beta_hat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    stale: bool,
}

impl IntegratedModel {
    pub fn new(d: usize, q: usize, params: &GlmParams) -> Result<Self> {
        Ok(IntegratedModel {
            d,
            h: params.links.h,
            ridge: params.lambda_v,
            radius: params.radius,
            w_mat: DesignMatrix::new(d + q, params.lambda_v)?,
            history: Observations::new(d + q),
            beta_hat: DVector::zeros(d),
            theta_hat: DVector::zeros(q),
            stale: false,
        })
    }

    fn stack(psi_x: &DVector<f64>, psi_y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(psi_x.len() + psi_y.len(), psi_x.iter().chain(psi_y.iter()).copied())
    }

    pub fn observe(&mut self, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64) -> Result<()> {
        let z = Self::stack(psi_x, psi_y);
        self.w_mat.add(&z)?;
        self.history.push(&z, reward)?;
        self.stale = true;
        Ok(())
    }

    pub fn refit(&mut self) {
        if !self.stale {
            return;
        }
        let problem = IntegratedProblem {
            obs: &self.history,
            d: self.d,
            link: self.h,
            ridge: self.ridge,
            theta_radius: self.radius,
        };
        let fit = problem.fit(Some((&self.beta_hat, &self.theta_hat)), INTEGRATED_ITERS);
        self.beta_hat = fit.beta;
        self.theta_hat = fit.theta;
        self.stale = false;
    }

    fn mean(&self, psi_x: &DVector<f64>, psi_y: &DVector<f64>, beta: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        psi_x.dot(beta) * self.h.value(psi_y.dot(theta))
    }
}

/// Integrated UCB: `x^T beta h(w^T theta) + sqrt(rho_x ∨ rho_y) ||z||_{W^-1}`.
pub struct IntegratedUcb {
    k: usize,
    schedule: RadiusSchedule,
    pub model: IntegratedModel,
}

impl IntegratedUcb {
    pub fn new(k: usize, d: usize, q: usize, params: GlmParams) -> Result<Self> {
        let schedule = params.validate(k, d, q)?;
        Ok(IntegratedUcb { k, schedule, model: IntegratedModel::new(d, q, &params)? })
    }
}

impl ContextualPolicy for IntegratedUcb {
    fn select(&mut self, round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize {
        check_arms(arms, self.k, self.schedule.d, self.schedule.q);
        self.model.refit();
        let width = self.schedule.rho_x(round).max(self.schedule.rho_y(round)).sqrt();
        let m = &self.model;
        let scores: Vec<f64> = arms
            .psi_x
            .iter()
            .zip(&arms.psi_y)
            .map(|(x, y)| {
                m.mean(x, y, &m.beta_hat, &m.theta_hat) + width * m.w_mat.inv_norm(&IntegratedModel::stack(x, y))
            })
            .collect();
        argmax_random_tie(&scores, rng)
    }

    fn update(&mut self, _round: u64, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64, _nonzero: bool) {
        self.model.observe(psi_x, psi_y, reward).expect("feature dimensions checked at select");
    }
}

/// Integrated TS: `(beta~, theta~) ~ N((beta, theta), (phi_b^2 ∨ phi_t^2) W^-1)`.
pub struct IntegratedTs {
    k: usize,
    d: usize,
    q: usize,
    phi: f64,
    pub model: IntegratedModel,
}

impl IntegratedTs {
    pub fn new(k: usize, d: usize, q: usize, params: GlmParams) -> Result<Self> {
        params.validate(k, d, q)?;
        // Both scales share one form; they differ only in the dimension.
        let phi = params.baseline_phi2(k, d).max(params.baseline_phi2(k, q)).sqrt();
        Ok(IntegratedTs { k, d, q, phi, model: IntegratedModel::new(d, q, &params)? })
    }
}

impl ContextualPolicy for IntegratedTs {
    fn select(&mut self, _round: u64, arms: &ArmFeatures, rng: &mut dyn RngCore) -> usize {
        check_arms(arms, self.k, self.d, self.q);
        self.model.refit();
        let m = &self.model;
        let mean = IntegratedModel::stack(&m.beta_hat, &m.theta_hat);
        let draw = m.w_mat.sample_gaussian(&mean, self.phi, rng);
        let beta = draw.rows(0, self.d).into_owned();
        let theta = draw.rows(self.d, self.q).into_owned();
        let scores: Vec<f64> = arms.psi_x.iter().zip(&arms.psi_y).map(|(x, y)| m.mean(x, y, &beta, &theta)).collect();
        argmax_random_tie(&scores, rng)
    }

    fn update(&mut self, _round: u64, psi_x: &DVector<f64>, psi_y: &DVector<f64>, reward: f64, _nonzero: bool) {
        self.model.observe(psi_x, psi_y, reward).expect("feature dimensions checked at select");
    }
}

/// Plays the arm with the largest expected reward under the true parameters.
pub struct ContextOracle {
    beta: DVector<f64>,
    theta: DVector<f64>,
    links: LinkPair,
}

impl ContextOracle {
    pub fn new(beta: DVector<f64>, theta: DVector<f64>, links: LinkPair) -> Self {
        ContextOracle { beta, theta, links }
    }

    pub fn expected_reward(&self, psi_x: &DVector<f64>, psi_y: &DVector<f64>) -> f64 {
        expected_reward(&self.beta, &self.theta, &self.links, psi_x, psi_y)
    }
}

/// `g(psi_x^T beta) h(psi_y^T theta)`.
pub fn expected_reward(
    beta: &DVector<f64>,
    theta: &DVector<f64>,
    links: &LinkPair,
    psi_x: &DVector<f64>,
    psi_y: &DVector<f64>,
) -> f64 {
    links.g.value(psi_x.dot(beta)) * links.h.value(psi_y.dot(theta))
}

/// First arm attaining the maximum of `values`.
pub fn first_argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

impl ContextualPolicy for ContextOracle {
    fn select(&mut self, _round: u64, arms: &ArmFeatures, _rng: &mut dyn RngCore) -> usize {
        let values: Vec<f64> = arms.psi_x.iter().zip(&arms.psi_y).map(|(x, y)| self.expected_reward(x, y)).collect();
        first_argmax(&values)
    }

    fn update(&mut self, _round: u64, _psi_x: &DVector<f64>, _psi_y: &DVector<f64>, _reward: f64, _nonzero: bool) {}
}
