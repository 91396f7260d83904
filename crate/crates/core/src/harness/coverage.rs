use rayon::prelude::*;

use crate::concentration::{
    bernoulli_width, heavy_trunc_level_fixed, heavy_width_fixed, nonzero_width_oracle, oracle_validity_threshold,
    product_ucb, ConfidenceLevel, TailSpec,
};
use crate::distributions::{sample_zi, NoiseModel, ZiArm};
use crate::error::{invalid, Result};
use crate::rng::{fnv1a64, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Product bound with sub-Gaussian non-zero part, true gate probability.
    Light,
    /// Trimmed mean under Student-t(3) noise, lower deviation.
    Heavy,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "light" => Ok(Suite::Light),
            "heavy" => Ok(Suite::Heavy),
            other => Err(invalid("suite", format!("unknown suite `{other}`, expected light or heavy"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Light => "light",
            Suite::Heavy => "heavy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageStatus {
    Pass,
    Fail,
    /// Sample size below the regime where the bound claims coverage; not a failure.
    ValidityUnmet,
}

impl CoverageStatus {
    pub fn name(self) -> &'static str {
        match self {
            CoverageStatus::Pass => "pass",
            CoverageStatus::Fail => "fail",
            CoverageStatus::ValidityUnmet => "validity unmet",
        }
    }
}

/// One Monte Carlo scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCase {
    pub mu: f64,
    pub p: f64,
    pub n: u64,
    pub delta: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub bound: String,
    pub case: CoverageCase,
    pub violations: usize,
    pub rate: f64,
    /// `delta + 3 sqrt(delta (1 - delta) / trials)`.
    pub tolerance: f64,
    pub status: CoverageStatus,
}

impl CoverageRow {
    pub fn failed(&self) -> bool {
        self.status == CoverageStatus::Fail
    }
}

pub fn binomial_tolerance(delta: f64, trials: usize) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}

/// Default scenarios: a main row, a row below the validity threshold and a `delta = 0.9` row.
pub fn default_cases(suite: Suite) -> Vec<CoverageCase> {
    let t = 10_000;
    match suite {
        Suite::Light => vec![
            CoverageCase { mu: 1.0, p: 0.5, n: 200, delta: 0.05, trials: t },
            CoverageCase { mu: 1.0, p: 0.5, n: 40, delta: 0.05, trials: t },
            CoverageCase { mu: 1.0, p: 0.3, n: 1000, delta: 0.05, trials: t },
            CoverageCase { mu: 1.0, p: 0.5, n: 200, delta: 0.9, trials: t },
        ],
        Suite::Heavy => vec![
            CoverageCase { mu: 1.0, p: 0.5, n: 500, delta: 0.05, trials: t },
            CoverageCase { mu: 1.0, p: 0.3, n: 2000, delta: 0.05, trials: t },
            CoverageCase { mu: 1.0, p: 0.5, n: 500, delta: 0.9, trials: t },
        ],
    }
}

pub fn run_suite(suite: Suite, cases: &[CoverageCase], seed: u64) -> Result<Vec<CoverageRow>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, case)| match suite {
            Suite::Light => light_row(case, seed, i as u64),
            Suite::Heavy => heavy_row(case, seed, i as u64),
        })
        .collect()
}

fn finish(bound: &str, case: &CoverageCase, violations: usize) -> CoverageRow {
    let rate = violations as f64 / case.trials as f64;
    let tolerance = binomial_tolerance(case.delta, case.trials);
    let status = if rate <= tolerance { CoverageStatus::Pass } else { CoverageStatus::Fail };
    CoverageRow { bound: bound.into(), case: case.clone(), violations, rate, tolerance, status }
}

fn count_violations(case: &CoverageCase, violated: impl Fn(u64) -> bool + Sync) -> usize {
    (0..case.trials as u64).into_par_iter().filter(|&trial| violated(trial)).count()
}

/// Gaussian non-zero part with `sigma = 1`, sub-Weibull(2; C = 1).
/// A trial violates when `mu p > (mu_hat + U_X)(p_hat + U_Y)`.
fn light_row(case: &CoverageCase, seed: u64, row: u64) -> Result<CoverageRow> {
    const BOUND: &str = "product_ucb";
    let conf = ConfidenceLevel::new(case.delta)?;
    let required = oracle_validity_threshold(case.p, conf);
    if case.n < required {
        let mut r = finish(BOUND, case, 0);
        r.status = CoverageStatus::ValidityUnmet;
        return Ok(r);
    }
    let tail = TailSpec::sub_weibull(2.0, 1.0)?;
    let arm = ZiArm::new(case.p, case.mu, NoiseModel::gaussian(1.0)?)?;
    let u_x = nonzero_width_oracle(case.n, case.p, &tail, conf)?;
    let u_y = bernoulli_width(case.n, conf)?;
    let target = case.mu * case.p;
    let tag = fnv1a64("coverage-light");
    let violations = count_violations(case, |trial| {
        let mut rng = stream(seed, &[tag, row, trial]);
        let (mut sum, mut nonzero) = (0.0, 0u64);
        for _ in 0..case.n {
            let (r, y) = sample_zi(&arm, &mut rng);
            sum += r;
            nonzero += y as u64;
        }
        let p_hat = nonzero as f64 / case.n as f64;
        let mu_hat = if nonzero > 0 { sum / nonzero as f64 } else { 0.0 };
        target > product_ucb(mu_hat, p_hat, u_x, u_y)
    });
    Ok(finish(BOUND, case, violations))
}

/// Student-t(3) noise with `eps = 0.5` and `M` bounding `E|eps|^1.5`.
///
/// The `j`-th non-zero observation is kept when its magnitude is at most
/// `(j M / log(2/delta))^(1/(1+eps))`; the trimmed mean divides the kept sum by
/// the number of non-zeros. A trial violates when
/// `mu - trimmed >= g(p, eps) M^(1/(1+eps)) (log(2/delta)/n)^(eps/(1+eps))`.
fn heavy_row(case: &CoverageCase, seed: u64, row: u64) -> Result<CoverageRow> {
    const BOUND: &str = "trimmed_mean_lower";
    let conf = ConfidenceLevel::new(case.delta)?;
    let noise = NoiseModel::StudentT { df: 3.0 };
    let eps = 0.5;
    let moment = noise
        .absolute_moment_upper_bound(1.0 + eps)
        .ok_or_else(|| invalid("noise", "moment bound unavailable"))?;
    let tail = TailSpec::heavy(eps, moment)?;
    let arm = ZiArm::new(case.p, case.mu, noise)?;
    let width = heavy_width_fixed(case.n, case.p, &tail, conf)?;
    let levels: Vec<f64> =
        (1..=case.n).map(|j| heavy_trunc_level_fixed(j, &tail, conf)).collect::<Result<_>>()?;
    let tag = fnv1a64("coverage-heavy");
    let violations = count_violations(case, |trial| {
        let mut rng = stream(seed, &[tag, row, trial]);
        let (mut kept, mut nonzero) = (0.0, 0usize);
        for _ in 0..case.n {
            let (r, y) = sample_zi(&arm, &mut rng);
            if y {
                if r.abs() <= levels[nonzero] {
                    kept += r;
                }
                nonzero += 1;
            }
        }
        let trimmed = if nonzero > 0 { kept / nonzero as f64 } else { 0.0 };
        case.mu - trimmed >= width
    });
    Ok(finish(BOUND, case, violations))
}
