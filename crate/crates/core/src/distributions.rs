//! Samplers for rewards, noise and posterior draws.
//!
//! Every sampler is a deterministic function of its parameters and the
//! generator state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Gamma, StandardNormal, StudentT};

use crate::error::{invalid, Result, ZibError};

/// Finite stand-in for a clip at `-inf`.
pub const CLIP_NONE: f64 = -1e300;
/// Finite stand-in for a clip at `+inf`.
pub const CLIP_ALL: f64 = 1e300;

/// Mean-zero noise added to the non-zero mean.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Gaussian {
        variance: f64,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    },
    /// `Exp(rate) - 1/rate`.
    CenteredExponential {
        rate: f64,
    },
    StudentT {
        df: f64,
    },
}

impl NoiseModel {
    pub fn gaussian(variance: f64) -> Result<Self> {
        let n = NoiseModel::Gaussian { variance };
        n.validate()?;
        Ok(n)
    }

    /// Symmetric two-component mixture: weights (0.5, 0.5), means (-1, 1), variances (0.5, 0.5).
    pub fn default_mixture() -> Self {
        NoiseModel::GaussianMixture {
            weights: vec![0.5, 0.5],
            means: vec![-1.0, 1.0],
            variances: vec![0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Gaussian { variance } => {
                if !(*variance >= 0.0 && variance.is_finite()) {
                    return Err(invalid("variance", "must be finite and nonnegative"));
                }
            }
            NoiseModel::GaussianMixture {
                weights,
                means,
                variances,
            } => {
                if weights.is_empty() || weights.len() != means.len() || means.len() != variances.len() {
                    return Err(invalid("mixture", "weights, means and variances must have equal nonzero length"));
                }
                if weights.iter().any(|&w| w < 0.0) || variances.iter().any(|&v| v < 0.0) {
                    return Err(invalid("mixture", "weights and variances must be nonnegative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid("mixture", format!("weights sum to {total}, expected 1")));
                }
                let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
                if mean.abs() > 1e-9 {
                    return Err(invalid("mixture", format!("overall mean is {mean}, expected 0")));
                }
            }
            NoiseModel::CenteredExponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(invalid("rate", "must be positive"));
                }
            }
            NoiseModel::StudentT { df } => {
                if !(*df > 1.0 && df.is_finite()) {
                    return Err(invalid("df", "must exceed 1 for a finite mean"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian { variance } => variance.sqrt() * standard_normal(rng),
            NoiseModel::GaussianMixture {
                weights,
                means,
                variances,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut idx = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        idx = i;
                        break;
                    }
                }
                means[idx] + variances[idx].sqrt() * standard_normal(rng)
            }
            NoiseModel::CenteredExponential { rate } => {
                let e: f64 = Exp::new(*rate).expect("validated rate").sample(rng);
                e - 1.0 / rate
            }
            NoiseModel::StudentT { df } => StudentT::new(*df).expect("validated df").sample(rng),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { variance } => *variance,
            NoiseModel::GaussianMixture {
                weights,
                means,
                variances,
            } => weights
                .iter()
                .zip(means.iter().zip(variances))
                .map(|(w, (m, v))| w * (v + m * m))
                .sum(),
            NoiseModel::CenteredExponential { rate } => 1.0 / (rate * rate),
            NoiseModel::StudentT { df } => {
                if *df > 2.0 {
                    df / (df - 2.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Sub-Gaussian variance proxy, when one exists.
    ///
    /// For a mixture this is `sup_s (2/s^2) log E exp(s eps)` located on a
    /// dense log grid; it is exact for a single Gaussian.
    pub fn subgaussian_proxy(&self) -> Option<f64> {
        match self {
            NoiseModel::Gaussian { variance } => Some(*variance),
            NoiseModel::GaussianMixture {
                weights,
                means,
                variances,
            } => {
                let log_mgf = |s: f64| {
                    let terms: Vec<f64> = weights
                        .iter()
                        .zip(means.iter().zip(variances))
                        .filter(|(w, _)| **w > 0.0)
                        .map(|(w, (m, v))| w.ln() + s * m + 0.5 * s * s * v)
                        .collect();
                    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
                };
                let mut best = self.variance();
                for i in 0..4000 {
                    let mag = 10f64.powf(-4.0 + 8.0 * i as f64 / 3999.0);
                    for s in [mag, -mag] {
                        best = best.max(2.0 * log_mgf(s) / (s * s));
                    }
                }
                Some(best)
            }
            NoiseModel::CenteredExponential { .. } | NoiseModel::StudentT { .. } => None,
        }
    }

    /// Single sub-exponential parameter `lambda` with
    /// `E exp(s eps) <= exp(s^2 lambda^2 / 2)` for `|s| <= 1/lambda`.
    pub fn subexponential_parameter(&self) -> Option<f64> {
        match self {
            NoiseModel::CenteredExponential { rate } => Some(2.0 / rate),
            NoiseModel::StudentT { .. } => None,
            other => other.subgaussian_proxy().map(f64::sqrt),
        }
    }

    /// Upper bound on `E |eps|^order`, by composite Simpson integration of
    /// the density on `[0, L]` plus an analytic bound on the tail mass.
    ///
    /// Only Student-t noise is supported; other models return `None`.
    pub fn absolute_moment_upper_bound(&self, order: f64) -> Option<f64> {
        use statrs::distribution::{Continuous, StudentsT};
        let NoiseModel::StudentT { df } = *self else {
            return None;
        };
        if order >= df {
            return None;
        }
        let dist = StudentsT::new(0.0, 1.0, df).ok()?;
        let upper: f64 = 1e4;
        // Integrate on u = log(1 + t) to resolve both the bulk and the tail.
        let f = |u: f64| {
            let t = u.exp_m1();
            t.powf(order) * dist.pdf(t) * u.exp()
        };
        let (a, b) = (0.0, upper.ln_1p());
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + h * i as f64);
        }
        let body = acc * h / 3.0;
        // pdf(t) <= c (t^2/df)^(-(df+1)/2) with c = pdf(0).
        let c = dist.pdf(0.0) * df.powf((df + 1.0) / 2.0);
        let tail_exp = order - df - 1.0;
        let tail = c * upper.powf(tail_exp + 1.0) / -(tail_exp + 1.0);
        // Symmetric density; relative slack covers quadrature error.
        Some(2.0 * (body + tail) * (1.0 + 1e-6))
    }
}

fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// One arm of a zero-inflated bandit: `R = Y (mu + eps)` with `Y ~ Bernoulli(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZiArm {
    pub p: f64,
    pub mu: f64,
    pub noise: NoiseModel,
}

impl ZiArm {
    pub fn new(p: f64, mu: f64, noise: NoiseModel) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid("p", format!("must lie in (0, 1], got {p}")));
        }
        noise.validate()?;
        Ok(ZiArm { p, mu, noise })
    }

    pub fn mean_reward(&self) -> f64 {
        self.mu * self.p
    }
}

/// Draw `(R, Y)`. The gate is drawn first; noise is drawn only for an open gate.
pub fn sample_zi<R: RngCore + ?Sized>(arm: &ZiArm, rng: &mut R) -> (f64, bool) {
    let y = arm.p >= 1.0 || rng.random::<f64>() < arm.p;
    if y {
        (arm.mu + arm.noise.sample(rng), true)
    } else {
        (0.0, false)
    }
}

/// `max(N(mean, variance), clip)`.
pub fn sample_clipped_normal<R: RngCore + ?Sized>(mean: f64, variance: f64, clip: f64, rng: &mut R) -> f64 {
    let draw = mean + variance.max(0.0).sqrt() * standard_normal(rng);
    draw.max(clip)
}

/// Beta draw by the two-Gamma construction.
pub fn sample_beta<R: RngCore + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let x: f64 = Gamma::new(alpha, 1.0).expect("alpha > 0").sample(rng);
    let y: f64 = Gamma::new(beta, 1.0).expect("beta > 0").sample(rng);
    if x + y > 0.0 {
        x / (x + y)
    } else {
        // Both shapes tiny enough to underflow: the mass sits at the endpoints.
        if alpha >= beta { 1.0 } else { 0.0 }
    }
}

/// `max(Beta(alpha, beta), clip)`.
pub fn sample_clipped_beta<R: RngCore + ?Sized>(alpha: f64, beta: f64, clip: f64, rng: &mut R) -> f64 {
    sample_beta(alpha, beta, rng).max(clip)
}

/// `mean + L z` with `z` standard normal, where `L` is a lower-triangular
/// factor of the covariance.
pub fn sample_mvnormal<R: RngCore + ?Sized>(
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let d = mean.len();
    if factor.nrows() != d || factor.ncols() != d {
        return Err(ZibError::DimensionMismatch {
            expected: d,
            got: factor.nrows().max(factor.ncols()),
        });
    }
    let z = DVector::from_fn(d, |_, _| standard_normal(rng));
    Ok(mean + factor.lower_triangle() * z)
}
