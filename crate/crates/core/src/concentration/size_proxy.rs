//! Variance proxy of a raw zero-inflated reward.
//!
//! For `R = Y X` with `Y ~ Bernoulli(p)` and `X - mu` sub-Gaussian with proxy
//! `sigma2`, the proxy of `R` is the supremum over `s != 0` of
//!
//! ```text
//! (2 / s^2) [ -s mu p + log(1 - p + p exp(s mu + s^2 sigma2 / 2)) ]
//! ```
//!
//! The supremum is located by a coarse log-spaced scan followed by
//! golden-section refinement on `log |s|`, separately for each sign of `s`.

use crate::error::{invalid, Result};

const S_MIN: f64 = 1e-6;
const S_MAX: f64 = 1e4;
const COARSE_POINTS: usize = 96;
const GOLDEN_TOL: f64 = 1e-12;

/// Which index family the proxy feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyFamily {
    /// Returns `tau^2`; the size parameter is the sub-Gaussian proxy `sigma2`.
    SubGaussian,
    /// Returns `alpha^2 = lambda^2 ∨ sup(...)` with `lambda^2` in place of `sigma2`.
    SubExponential,
}

/// Solved proxy together with the maximizing `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeProxy {
    pub value: f64,
    pub argmax: f64,
}

/// Bracketed MGF term divided by `s^2 / 2`; numerically stable for both signs of the exponent.
pub fn size_proxy_objective(s: f64, mu: f64, p: f64, sigma2: f64) -> f64 {
    let half_quad = 0.5 * s * s * sigma2;
    let bracket = if p >= 1.0 {
        half_quad
    } else if p <= 0.0 {
        0.0
    } else {
        let a = s * mu + half_quad;
        if a >= 0.0 || -a < 700.0 {
            // log(1 - p + p e^a) - s mu p = s mu (1-p) + s^2 sigma2/2 + log(1 + (1-p)(e^-a - 1))
            s * mu * (1.0 - p) + half_quad + ((1.0 - p) * (-a).exp_m1()).ln_1p()
        } else {
            (p * a.exp_m1()).ln_1p() - s * mu * p
        }
    };
    2.0 * bracket / (s * s)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn maximize_one_sign(sign: f64, mu: f64, p: f64, sigma2: f64) -> (f64, f64) {
    let f = |u: f64| size_proxy_objective(sign * u.exp(), mu, p, sigma2);
    let (lo, hi) = (S_MIN.ln(), S_MAX.ln());
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..COARSE_POINTS {
        let v = f(lo + step * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let a = lo + step * best.0.saturating_sub(1) as f64;
    let b = (lo + step * (best.0 + 1) as f64).min(hi);
    let (u, v) = golden_max(f, a, b);
    let (u, v) = if v >= best.1 { (u, v) } else { (lo + step * best.0 as f64, best.1) };
    (sign * u.exp(), v)
}

/// Proxy of the raw reward given non-zero mean `mu_hat`, gate probability
/// `p_hat` and non-zero size parameter `size` (`sigma^2` for the
/// sub-Gaussian family, `lambda` for the sub-exponential family).
pub fn naive_size_proxy(mu_hat: f64, p_hat: f64, size: f64, family: ProxyFamily) -> Result<SizeProxy> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(invalid("p_hat", format!("must lie in [0, 1], got {p_hat}")));
    }
    if !(size > 0.0 && size.is_finite()) {
        return Err(invalid("size", format!("must be positive, got {size}")));
    }
    if !mu_hat.is_finite() {
        return Err(invalid("mu_hat", "must be finite"));
    }
    let sigma2 = match family {
        ProxyFamily::SubGaussian => size,
        ProxyFamily::SubExponential => size * size,
    };
    let pos = maximize_one_sign(1.0, mu_hat, p_hat, sigma2);
    let neg = maximize_one_sign(-1.0, mu_hat, p_hat, sigma2);
    let (argmax, value) = if pos.1 >= neg.1 { pos } else { neg };
    let value = match family {
        ProxyFamily::SubGaussian => value,
        ProxyFamily::SubExponential => value.max(sigma2),
    };
    Ok(SizeProxy { value, argmax })
}
