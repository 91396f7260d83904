use rand::Rng;

use crate::concentration::{naive_size_proxy, ProxyFamily};
use crate::error::Result;
use crate::rng::{fnv1a64, stream};

/// Comparison of the solver against a dense grid for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyCheck {
    pub mu: f64,
    pub p: f64,
    pub sigma2: f64,
    pub solver: f64,
    pub grid: f64,
    pub relative_gap: f64,
}

/// Objective written directly from the moment-generating function of `Y X`,
/// with a log-sum-exp guard but no other rearrangement.
fn direct_objective(s: f64, mu: f64, p: f64, sigma2: f64) -> f64 {
    let a = s * mu + 0.5 * s * s * sigma2;
    // log(1 - p + p e^a)
    let log_mgf = if a > 0.0 {
        a + (p + (1.0 - p) * (-a).exp()).ln()
    } else {
        (1.0 - p + p * a.exp()).ln()
    };
    2.0 * (log_mgf - s * mu * p) / (s * s)
}

/// Maximum of the objective over `s = ±10^u`, `u` evenly spaced on `[-4, 3]`,
/// `points` values per sign.
pub fn grid_size_proxy(mu: f64, p: f64, sigma2: f64, points: usize) -> f64 {
    let (lo, hi) = (-4.0f64, 3.0f64);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..points {
        let s = 10f64.powf(lo + step * i as f64);
        best = best.max(direct_objective(s, mu, p, sigma2)).max(direct_objective(-s, mu, p, sigma2));
    }
    best
}

/// Solver versus a `points`-per-sign grid on `inputs` random `(mu, p, sigma2)`
/// drawn from `[-5, 5] x [0.05, 0.95] x [0.1, 4]`.
pub fn size_proxy_check(inputs: usize, points: usize, seed: u64) -> Result<Vec<ProxyCheck>> {
    let mut rng = stream(seed, &[fnv1a64("oracle-size-proxy")]);
    (0..inputs)
        .map(|_| {
            let mu = rng.random_range(-5.0..5.0);
            let p = rng.random_range(0.05..0.95);
            let sigma2 = rng.random_range(0.1..4.0);
            let solver = naive_size_proxy(mu, p, sigma2, ProxyFamily::SubGaussian)?.value;
            let grid = grid_size_proxy(mu, p, sigma2, points);
            Ok(ProxyCheck { mu, p, sigma2, solver, grid, relative_gap: (solver - grid).abs() / grid.abs() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_recovers_full_gate_variance() {
        let g = grid_size_proxy(3.0, 1.0 - 1e-15, 2.0, 2000);
        assert!((g - 2.0).abs() < 1e-6);
    }

    #[test]
    fn solver_agrees_with_coarse_grid() {
        for c in size_proxy_check(10, 20_000, 9).unwrap() {
            assert!(c.relative_gap < 1e-3, "{c:?}");
        }
    }
}
