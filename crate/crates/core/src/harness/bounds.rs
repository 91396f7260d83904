use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::concentration::{
    bernoulli_width, naive_size_proxy, nonzero_width_estimated, oracle_validity_threshold, product_ucb,
    ConfidenceLevel, ProxyFamily, TailSpec,
};
use crate::distributions::{sample_zi, NoiseModel, ZiArm};
use crate::error::{invalid, Result};
use crate::rng::{fnv1a64, stream};

/// Upper-bound constructions compared on one data stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Product,
    NaiveNonzeroParam,
    NaiveEmpVar,
    NaiveSolved,
    NaiveTrue,
    MonteCarloQuantile,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 6] = [
        BoundMethod::Product,
        BoundMethod::NaiveNonzeroParam,
        BoundMethod::NaiveEmpVar,
        BoundMethod::NaiveSolved,
        BoundMethod::NaiveTrue,
        BoundMethod::MonteCarloQuantile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Product => "product",
            BoundMethod::NaiveNonzeroParam => "naive_nonzero_param",
            BoundMethod::NaiveEmpVar => "naive_emp_var",
            BoundMethod::NaiveSolved => "naive_solved",
            BoundMethod::NaiveTrue => "naive_true",
            BoundMethod::MonteCarloQuantile => "monte_carlo_quantile",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub mu: f64,
    pub sigma2: f64,
    pub p: f64,
    pub delta: f64,
    pub grid: Vec<u64>,
    pub resamples: usize,
    pub seed: u64,
}

impl BoundParams {
    pub fn new(mu: f64, sigma2: f64, p: f64, delta: f64, grid: Vec<u64>) -> Self {
        BoundParams { mu, sigma2, p, delta, grid, resamples: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub n: u64,
    pub method: BoundMethod,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
    /// Smallest `n` at which the observed-mean statement holds with the true `p`.
    pub validity_threshold: u64,
}

impl BoundTable {
    pub fn value(&self, n: u64, method: BoundMethod) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n && r.method == method).map(|r| r.value)
    }
}

/// Parse `lo:hi:log:count`, `lo:hi:lin:count` or a comma-separated list of sizes.
pub fn parse_grid(spec: &str) -> Result<Vec<u64>> {
    let bad = |reason: String| invalid("n_grid", reason);
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let grid: Vec<u64> = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad(format!("`{s}` is not a sample size"))))
            .collect::<Result<_>>()?,
        [lo, hi, scale, count] => {
            let num = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("`{s}` is not a sample size")));
            let (lo, hi, count) = (num(lo)?, num(hi)?, num(count)?);
            if lo == 0 || hi < lo || count == 0 {
                return Err(bad(format!("need 1 <= lo <= hi and count >= 1 in `{spec}`")));
            }
            let point = |i: u64, f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64| {
                if count == 1 {
                    return lo;
                }
                let w = i as f64 / (count - 1) as f64;
                g(f(lo as f64) + w * (f(hi as f64) - f(lo as f64))).round() as u64
            };
            match *scale {
                "log" => (0..count).map(|i| point(i, &f64::ln, &f64::exp)).collect(),
                "lin" => (0..count).map(|i| point(i, &|x| x, &|x| x)).collect(),
                other => return Err(bad(format!("unknown scale `{other}`, expected log or lin"))),
            }
        }
        _ => return Err(bad(format!("cannot parse `{spec}`"))),
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err(bad("sample sizes must be positive".into()));
    }
    Ok(grid)
}

#[derive(Default, Clone, Copy)]
struct Prefix {
    sum: f64,
    sum_sq: f64,
    nonzero: u64,
}

/// Bounds on `mu * p` from each method at each sample size of the grid.
///
/// One stream of `max(grid)` zero-inflated Gaussian rewards is drawn and every
/// method sees its length-`n` prefix. The Monte Carlo reference is
/// `R_bar + q`, with `q` the `1 - delta` quantile of `mu p - R_bar'` over
/// independent replicate samples of size `n`.
pub fn bound_comparison(params: &BoundParams) -> Result<BoundTable> {
    let BoundParams { mu, sigma2, p, delta, ref grid, resamples, seed } = *params;
    let conf = ConfidenceLevel::new(delta)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", format!("must lie in (0, 1], got {p}")));
    }
    if resamples == 0 {
        return Err(invalid("resamples", "must be positive"));
    }
    let arm = ZiArm::new(p, mu, NoiseModel::gaussian(sigma2)?)?;
    let tail = TailSpec::sub_weibull(2.0, sigma2.sqrt())?;
    let true_proxy = naive_size_proxy(mu, p, sigma2, ProxyFamily::SubGaussian)?.value;
    let n_max = *grid.iter().max().ok_or_else(|| invalid("n_grid", "empty grid"))?;

    let mut rng = stream(seed, &[fnv1a64("bounds-data")]);
    let mut prefix = Vec::with_capacity(n_max as usize + 1);
    let mut acc = Prefix::default();
    prefix.push(acc);
    for _ in 0..n_max {
        let (r, y) = sample_zi(&arm, &mut rng);
        acc.sum += r;
        acc.sum_sq += r * r;
        acc.nonzero += y as u64;
        prefix.push(acc);
    }

    let log_term = (2.0 / delta).ln();
    let naive = |r_bar: f64, proxy: f64, n: f64| r_bar + (2.0 * proxy * log_term / n).sqrt();
    let rows_per_n: Vec<Vec<BoundRow>> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &n)| -> Result<Vec<BoundRow>> {
            let s = prefix[n as usize];
            let nf = n as f64;
            let r_bar = s.sum / nf;
            let p_hat = s.nonzero as f64 / nf;
            let mu_hat = if s.nonzero > 0 { s.sum / s.nonzero as f64 } else { 0.0 };
            let u_x = nonzero_width_estimated(n, p_hat.max(1.0 / nf), &tail, conf)?;
            let u_y = bernoulli_width(n, conf)?;
            let emp_var = if n > 1 { ((s.sum_sq - nf * r_bar * r_bar) / (nf - 1.0)).max(0.0) } else { 0.0 };
            let solved = naive_size_proxy(mu_hat, p_hat, sigma2, ProxyFamily::SubGaussian)?.value;
            let mc = r_bar + monte_carlo_quantile(mu, sigma2, p, n, delta, resamples, seed, gi as u64)?;
            let values = [
                product_ucb(mu_hat, p_hat, u_x, u_y),
                naive(r_bar, sigma2, nf),
                naive(r_bar, emp_var, nf),
                naive(r_bar, solved, nf),
                naive(r_bar, true_proxy, nf),
                mc,
            ];
            Ok(BoundMethod::ALL.iter().zip(values).map(|(&method, value)| BoundRow { n, method, value }).collect())
        })
        .collect::<Result<_>>()?;
    Ok(BoundTable {
        rows: rows_per_n.into_iter().flatten().collect(),
        validity_threshold: oracle_validity_threshold(p, conf),
    })
}

/// `1 - delta` empirical quantile of `mu p - R_bar'` over `resamples`
/// replicate means. Each replicate is drawn exactly: the non-zero count is
/// Binomial(n, p) and, given `B` non-zeros, their sum is N(B mu, B sigma2).
#[allow(clippy::too_many_arguments)]
fn monte_carlo_quantile(
    mu: f64,
    sigma2: f64,
    p: f64,
    n: u64,
    delta: f64,
    resamples: usize,
    seed: u64,
    grid_index: u64,
) -> Result<f64> {
    let binom = Binomial::new(n, p).map_err(|e| invalid("p", e.to_string()))?;
    let mut rng = stream(seed, &[fnv1a64("bounds-resample"), grid_index]);
    let target = mu * p;
    let mut dev: Vec<f64> = (0..resamples)
        .map(|_| {
            let b = binom.sample(&mut rng) as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            let sum = b * mu + (b * sigma2).sqrt() * z;
            target - sum / n as f64
        })
        .collect();
    dev.sort_by(f64::total_cmp);
    let idx = (((1.0 - delta) * resamples as f64).ceil() as usize).clamp(1, resamples) - 1;
    Ok(dev[idx])
}
