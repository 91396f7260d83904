//! Confidence widths and constants consumed by the zero-inflated policies.
//!
//! All functions are pure. Widths are additive: a bound is `estimate + width`.

mod size_proxy;

pub use size_proxy::{naive_size_proxy, size_proxy_objective, ProxyFamily, SizeProxy};

use std::f64::consts::{E, PI};

use crate::error::{invalid, Result, ZibError};

/// Tail description of the non-zero noise `X - mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSpec {
    /// `E exp(|eps|^theta / C^theta) <= 2`.
    SubWeibull { theta: f64, size_c: f64 },
    /// `E |eps|^(1 + eps) <= M`.
    HeavyMoment { eps: f64, moment_m: f64 },
}

impl TailSpec {
    pub fn sub_weibull(theta: f64, size_c: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid("theta", format!("must be positive, got {theta}")));
        }
        if !(size_c > 0.0 && size_c.is_finite()) {
            return Err(invalid("size_c", format!("must be positive, got {size_c}")));
        }
        Ok(TailSpec::SubWeibull { theta, size_c })
    }

    pub fn heavy(eps: f64, moment_m: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid("eps", format!("must lie in (0, 1], got {eps}")));
        }
        if !(moment_m > 0.0 && moment_m.is_finite()) {
            return Err(invalid("moment_m", format!("must be positive, got {moment_m}")));
        }
        Ok(TailSpec::HeavyMoment { eps, moment_m })
    }

    fn sub_weibull_params(&self) -> Result<(f64, f64)> {
        match *self {
            TailSpec::SubWeibull { theta, size_c } => Ok((theta, size_c)),
            TailSpec::HeavyMoment { .. } => Err(invalid("tail", "expected a sub-Weibull tail")),
        }
    }

    fn heavy_params(&self) -> Result<(f64, f64)> {
        match *self {
            TailSpec::HeavyMoment { eps, moment_m } => Ok((eps, moment_m)),
            TailSpec::SubWeibull { .. } => Err(invalid("tail", "expected a heavy moment tail")),
        }
    }
}

/// Failure probability of a confidence statement, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConfidenceLevel(f64);

impl ConfidenceLevel {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta < 1.0 {
            Ok(ConfidenceLevel(delta))
        } else {
            Err(invalid("delta", format!("must lie in (0, 1), got {delta}")))
        }
    }

    pub fn delta(self) -> f64 {
        self.0
    }
}

/// The constants `(D(theta), E(theta))` of the sub-Weibull mean deviation bound.
///
/// `D` depends on the size parameter only in the `theta >= 1` branches.
pub fn subweibull_constants(theta: f64, size_c: f64) -> Result<(f64, f64)> {
    TailSpec::sub_weibull(theta, size_c)?;
    let e2 = E * E;
    let constants = if theta < 1.0 {
        let d = 2f64.sqrt().max(2f64.powf(1.0 / theta))
            * 8f64.sqrt()
            * E.powi(3)
            * (2.0 * PI).powf(0.25)
            * (1.0 / 24.0f64).exp()
            * ((2.0 / E).exp() / theta).powf(1.0 / theta);
        (d, 2f64.powf(2.0 / theta - 0.5))
    } else if theta < 2.0 {
        let d = (3.0 / (2.0 * e2)).sqrt() * (1.0 / size_c).max(size_c.powf(theta - 1.0));
        (d, 1.0 / 6f64.sqrt())
    } else {
        let d = (17.0 / (6.0 * e2)).sqrt() * (1.0 / size_c).max(size_c.powf(theta / 2.0 - 1.0));
        (d, 0.0)
    };
    Ok(constants)
}

/// Hoeffding width for a Bernoulli mean: `sqrt(log(2/delta) / (2n))`.
pub fn bernoulli_width(n: u64, delta: ConfidenceLevel) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(((2.0 / delta.0).ln() / (2.0 * n as f64)).sqrt())
}

fn sub_weibull_width(effective_n: f64, tail: &TailSpec, delta: ConfidenceLevel) -> Result<f64> {
    let (theta, size_c) = tail.sub_weibull_params()?;
    let (d, e) = subweibull_constants(theta, size_c)?;
    let log_term = (4.0 / delta.0).ln();
    let power = (1.0 / theta).max(1.0);
    Ok(2.0
        * E
        * d
        * size_c
        * ((log_term / effective_n).sqrt() + e * log_term.powf(power) / effective_n))
}

/// Width on the non-zero mean as used online, with the estimated gate
/// probability: the effective sample size is `n * p_hat / 2`.
pub fn nonzero_width_estimated(
    n: u64,
    p_hat: f64,
    tail: &TailSpec,
    delta: ConfidenceLevel,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(invalid("p_hat", format!("must lie in (0, 1], got {p_hat}")));
    }
    sub_weibull_width(n as f64 * p_hat / 2.0, tail, delta)
}

/// Smallest `n` for which the observed-mean bound with true `p` holds:
/// `ceil(4 log(2/delta) / p^2)`.
pub fn oracle_validity_threshold(p_true: f64, delta: ConfidenceLevel) -> u64 {
    (4.0 * (2.0 / delta.0).ln() / (p_true * p_true)).ceil() as u64
}

/// Width on the observed non-zero mean using the true gate probability.
///
/// Only valid once `n` reaches [`oracle_validity_threshold`]; below it the
/// coverage statement is void and an error is returned.
pub fn nonzero_width_oracle(
    n: u64,
    p_true: f64,
    tail: &TailSpec,
    delta: ConfidenceLevel,
) -> Result<f64> {
    if !(p_true > 0.0 && p_true <= 1.0) {
        return Err(invalid("p_true", format!("must lie in (0, 1], got {p_true}")));
    }
    let required = oracle_validity_threshold(p_true, delta);
    if n < required {
        return Err(ZibError::ValidityUnmet { n, required });
    }
    sub_weibull_width(n as f64 * p_true / 2.0, tail, delta)
}

/// Product-method bound on `mu * p`: `(x_bar + u_x) * (y_bar + u_y)`.
pub fn product_ucb(x_bar: f64, y_bar: f64, u_x: f64, u_y: f64) -> f64 {
    (x_bar + u_x) * (y_bar + u_y)
}

/// Inflation factor `g(p, eps)` of the trimmed-mean bound.
pub fn heavy_g(p: f64, eps: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", format!("must lie in (0, 1], got {p}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("eps", format!("must lie in (0, 1], got {eps}")));
    }
    let a = eps / (1.0 + eps);
    Ok(p.powf(-a) * (1.0 + eps) * 2f64.powf(a) + 4.0 / (3.0 * p) + 2.0 / p.sqrt())
}

/// Truncation level applied to a non-zero reward arriving at round `round`
/// when the arm has estimate `p_hat` after `count` pulls.
///
/// Round 1 is floored to round 2 so that `log(l^2) > 0`.
pub fn heavy_trunc_level(round: u64, p_hat: f64, count: u64, tail: &TailSpec) -> Result<f64> {
    let (eps, m) = tail.heavy_params()?;
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    let l = round.max(2) as f64;
    let a = eps / (1.0 + eps);
    Ok(heavy_g(p_hat, eps)? * m.powf(1.0 / (1.0 + eps)) * ((l * l).ln() / count as f64).powf(a))
}

/// Truncation level of the fixed-confidence trimmed mean:
/// `(j * M / log(2/delta))^(1/(1+eps))` for the `j`-th non-zero observation.
pub fn heavy_trunc_level_fixed(
    nonzero_index: u64,
    tail: &TailSpec,
    delta: ConfidenceLevel,
) -> Result<f64> {
    let (eps, m) = tail.heavy_params()?;
    if nonzero_index == 0 {
        return Err(invalid("nonzero_index", "must be at least 1"));
    }
    Ok((nonzero_index as f64 * m / (2.0 / delta.0).ln()).powf(1.0 / (1.0 + eps)))
}

/// Lower-deviation width of the fixed-confidence trimmed mean with true `p`:
/// `g(p, eps) M^(1/(1+eps)) (log(2/delta)/n)^(eps/(1+eps))`.
pub fn heavy_width_fixed(n: u64, p: f64, tail: &TailSpec, delta: ConfidenceLevel) -> Result<f64> {
    let (eps, m) = tail.heavy_params()?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let a = eps / (1.0 + eps);
    Ok(heavy_g(p, eps)? * m.powf(1.0 / (1.0 + eps)) * ((2.0 / delta.0).ln() / n as f64).powf(a))
}

/// Width on the trimmed non-zero mean: `M^(1/(1+eps)) (32 log t / c)^(eps/(1+eps))`.
pub fn heavy_width(count: u64, round: u64, tail: &TailSpec) -> Result<f64> {
    let (eps, m) = tail.heavy_params()?;
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    let t = round.max(2) as f64;
    let a = eps / (1.0 + eps);
    Ok(m.powf(1.0 / (1.0 + eps)) * (32.0 * t.ln() / count as f64).powf(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(d: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(d).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn constants_theta_two() {
        let (d, e) = subweibull_constants(2.0, 1.0).unwrap();
        assert!(close(d, (17.0 / (6.0 * E * E)).sqrt(), 1e-15));
        assert!(close(d, 0.619_233_372_138_81, 1e-12));
        assert_eq!(e, 0.0);
    }

    #[test]
    fn constants_theta_one() {
        let (d, e) = subweibull_constants(1.0, 1.0).unwrap();
        assert!(close(d, (3.0 / (2.0 * E * E)).sqrt(), 1e-15));
        assert!(close(d, 0.450_558_458_865_13, 1e-12));
        assert!(close(e, 0.40825, 1e-5));
    }

    #[test]
    fn constants_theta_half() {
        let (_, e) = subweibull_constants(0.5, 1.0).unwrap();
        assert!(close(e, 2f64.powf(3.5), 1e-14));
        assert!(close(e, 11.3137, 1e-5));
    }

    #[test]
    fn constants_reject_nonpositive() {
        assert!(subweibull_constants(0.0, 1.0).is_err());
        assert!(subweibull_constants(2.0, -1.0).is_err());
    }

    #[test]
    fn constants_theta_above_two_at_unit_size() {
        let (d2, _) = subweibull_constants(2.0, 1.0).unwrap();
        for theta in [2.5, 3.0, 7.0, 40.0] {
            let (d, e) = subweibull_constants(theta, 1.0).unwrap();
            assert_eq!(d, d2);
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn constants_continuous_in_size_within_branch() {
        for theta in [1.2, 2.0, 3.0] {
            for c in [0.5, 1.0, 2.0] {
                let (a, _) = subweibull_constants(theta, c).unwrap();
                let (b, _) = subweibull_constants(theta, c + 1e-9).unwrap();
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn bernoulli_width_examples() {
        let w = bernoulli_width(1, conf(2.0 / E)).unwrap();
        assert!(close(w, 0.5f64.sqrt(), 1e-14));
        let w = bernoulli_width(50, conf(0.05)).unwrap();
        assert!(close(w, 0.19207, 1e-4));
        let a = bernoulli_width(10, conf(0.1)).unwrap();
        let b = bernoulli_width(40, conf(0.1)).unwrap();
        assert!(close(b, a / 2.0, 1e-14));
        assert!(bernoulli_width(0, conf(0.1)).is_err());
    }

    #[test]
    fn estimated_width_theta_two_closed_form() {
        let tail = TailSpec::sub_weibull(2.0, 1.0).unwrap();
        let (d, _) = subweibull_constants(2.0, 1.0).unwrap();
        for &(n, p) in &[(10u64, 0.3), (200, 0.5), (1000, 1.0)] {
            let w = nonzero_width_estimated(n, p, &tail, conf(0.05)).unwrap();
            let expect = 2.0 * E * d * (2.0 * (80f64).ln() / (n as f64 * p)).sqrt();
            assert!(close(w, expect, 1e-13));
        }
        let a = nonzero_width_estimated(100, 0.4, &tail, conf(0.05)).unwrap();
        let b = nonzero_width_estimated(200, 0.4, &tail, conf(0.05)).unwrap();
        assert!(close(b, a / 2f64.sqrt(), 1e-13));
    }

    #[test]
    fn estimated_width_decreasing_in_p_hat() {
        let tail = TailSpec::sub_weibull(1.0, 1.5).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let w = nonzero_width_estimated(50, i as f64 / 20.0, &tail, conf(0.01)).unwrap();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn oracle_width_matches_estimated_and_checks_validity() {
        let tail = TailSpec::sub_weibull(2.0, 1.0).unwrap();
        let delta = conf(0.05);
        assert_eq!(oracle_validity_threshold(0.5, delta), 60);
        let w = nonzero_width_oracle(200, 0.5, &tail, delta).unwrap();
        let v = nonzero_width_estimated(200, 0.5, &tail, delta).unwrap();
        assert_eq!(w, v);
        // 2e * D(2) * sqrt(4 log(80) / 200), evaluated independently
        assert!(close(w, 0.996_623_986_529_563_5, 1e-12));
        assert!(matches!(
            nonzero_width_oracle(59, 0.5, &tail, delta),
            Err(ZibError::ValidityUnmet { n: 59, required: 60 })
        ));
    }

    #[test]
    fn product_examples() {
        assert_eq!(product_ucb(1.0, 0.5, 0.0, 0.0), 0.5);
        assert_eq!(product_ucb(0.0, 0.0, 1.0, 1.0), 1.0);
        assert!(close(product_ucb(2.0, 0.4, 0.1, 0.05), 0.945, 1e-14));
    }

    #[test]
    fn heavy_g_examples() {
        assert!(close(heavy_g(1.0, 1.0).unwrap(), 2.0 * 2f64.sqrt() + 4.0 / 3.0 + 2.0, 1e-14));
        assert!(close(heavy_g(1.0, 1.0).unwrap(), 6.1617, 1e-4));
        assert!(close(heavy_g(0.25, 1.0).unwrap(), 4.0 * 2f64.sqrt() + 16.0 / 3.0 + 4.0, 1e-14));
        assert!(close(heavy_g(0.25, 1.0).unwrap(), 14.990, 1e-4));
        assert!(heavy_g(0.0, 1.0).is_err());
    }

    #[test]
    fn heavy_g_decreasing_in_p() {
        for eps in [0.1, 0.5, 1.0] {
            let mut prev = f64::INFINITY;
            for i in 1..=200 {
                let g = heavy_g(i as f64 / 200.0, eps).unwrap();
                assert!(g < prev);
                prev = g;
            }
        }
    }

    #[test]
    fn heavy_trunc_examples() {
        let tail = TailSpec::heavy(1.0, 1.0).unwrap();
        // The closed form with log(l^2) = 2 at l = e needs a real round; use
        // integer rounds and compare against direct evaluation instead.
        let g1 = heavy_g(1.0, 1.0).unwrap();
        let c = 2u64 * 38; // ~ 2 g(1,1)^2
        let lvl = heavy_trunc_level(10, 1.0, c, &tail).unwrap();
        assert!(close(lvl, g1 * (100f64.ln() / c as f64).sqrt(), 1e-14));
        // round 1 is floored to round 2
        assert_eq!(
            heavy_trunc_level(1, 1.0, 5, &tail).unwrap(),
            heavy_trunc_level(2, 1.0, 5, &tail).unwrap()
        );
        let mut prev = 0.0;
        for l in 2..100 {
            let v = heavy_trunc_level(l, 0.4, 7, &tail).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let hi_p = heavy_trunc_level(50, 1.0, 7, &tail).unwrap();
        let lo_p = heavy_trunc_level(50, 0.25, 7, &tail).unwrap();
        assert!(hi_p < lo_p);
    }

    #[test]
    fn heavy_width_examples() {
        let tail = TailSpec::heavy(1.0, 1.0).unwrap();
        // t = e is not an integer round; check the c scaling at integer t.
        let w32 = heavy_width(32, 20, &tail).unwrap();
        assert!(close(w32, 20f64.ln().sqrt(), 1e-14));
        let w128 = heavy_width(128, 20, &tail).unwrap();
        assert!(close(w128, w32 / 2.0, 1e-14));
        let half = TailSpec::heavy(0.5, 1.0).unwrap();
        let a = heavy_width(10, 20, &half).unwrap();
        let b = heavy_width(80, 20, &half).unwrap();
        assert!(close(b, a / 2.0, 1e-13));
    }

    #[test]
    fn widths_monotone_in_count_and_delta() {
        let sw = TailSpec::sub_weibull(1.5, 1.2).unwrap();
        let hv = TailSpec::heavy(0.5, 2.0).unwrap();
        for n in 1..200u64 {
            let d = conf(0.05);
            assert!(bernoulli_width(n + 1, d).unwrap() < bernoulli_width(n, d).unwrap());
            assert!(
                nonzero_width_estimated(n + 1, 0.3, &sw, d).unwrap()
                    < nonzero_width_estimated(n, 0.3, &sw, d).unwrap()
            );
            assert!(heavy_width(n + 1, 500, &hv).unwrap() < heavy_width(n, 500, &hv).unwrap());
            assert!(
                heavy_width_fixed(n + 1, 0.3, &hv, d).unwrap()
                    < heavy_width_fixed(n, 0.3, &hv, d).unwrap()
            );
        }
        let deltas = [0.5, 0.2, 0.05, 0.01, 1e-4];
        for w in deltas.windows(2) {
            let (a, b) = (conf(w[0]), conf(w[1]));
            assert!(bernoulli_width(10, b).unwrap() > bernoulli_width(10, a).unwrap());
            assert!(
                nonzero_width_estimated(10, 0.5, &sw, b).unwrap()
                    > nonzero_width_estimated(10, 0.5, &sw, a).unwrap()
            );
            assert!(
                heavy_width_fixed(10, 0.5, &hv, b).unwrap()
                    > heavy_width_fixed(10, 0.5, &hv, a).unwrap()
            );
        }
    }

    #[test]
    fn confidence_level_bounds() {
        assert!(ConfidenceLevel::new(0.0).is_err());
        assert!(ConfidenceLevel::new(1.0).is_err());
        assert!(ConfidenceLevel::new(f64::NAN).is_err());
        assert!(TailSpec::heavy(1.5, 1.0).is_err());
        assert!(TailSpec::heavy(0.5, 0.0).is_err());
    }
}
