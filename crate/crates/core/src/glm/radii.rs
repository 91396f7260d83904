use crate::error::{invalid, Result};

/// Confidence radii of the contextual policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSchedule {
    pub sigma: f64,
    pub kappa_g: f64,
    pub kappa_h: f64,
    pub d: usize,
    pub q: usize,
    pub lambda_v: f64,
    pub lambda_u: f64,
    pub delta: f64,
    pub horizon: u64,
}

impl RadiusSchedule {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("kappa_g", self.kappa_g),
            ("kappa_h", self.kappa_h),
            ("lambda_v", self.lambda_v),
            ("lambda_u", self.lambda_u),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if self.d == 0 || self.q == 0 {
            return Err(invalid("d", "dimensions must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        Ok(())
    }

    fn log_inv_delta(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    /// UCB radius of the non-zero part at round `t`.
    pub fn rho_x(&self, t: u64) -> f64 {
        let d = self.d as f64;
        self.sigma / self.kappa_g
            * (4.0 * self.log_inv_delta() + d * (t as f64 / (self.lambda_v * d)).ln_1p()).sqrt()
    }

    /// UCB radius of the gate at round `t`.
    pub fn rho_y(&self, t: u64) -> f64 {
        let q = self.q as f64;
        (4.0 * self.log_inv_delta() + q * (t as f64 / (self.lambda_u * q)).ln_1p()).sqrt() / self.kappa_h
    }

    fn log_horizon(&self) -> f64 {
        (self.horizon as f64).ln().max(0.0)
    }

    /// Sampling radius of the non-zero part.
    pub fn varrho_x(&self) -> f64 {
        (self.d as f64 * self.log_inv_delta() * self.log_horizon()).sqrt()
    }

    /// Sampling radius of the gate.
    pub fn varrho_y(&self) -> f64 {
        (self.q as f64 * self.log_inv_delta() * self.log_horizon()).sqrt()
    }
}

/// Length of the initial uniform-exploration period.
///
/// `c` holds the four universal constants of the eigenvalue condition.
pub fn random_period_tau(
    d: usize,
    q: usize,
    delta: f64,
    p_star: f64,
    sigma_z2: f64,
    sigma_w2: f64,
    c: [f64; 4],
) -> Result<u64> {
    for (name, v) in [("p_star", p_star), ("sigma_z2", sigma_z2), ("sigma_w2", sigma_w2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if c.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(invalid("c", "constants must be nonnegative"));
    }
    let l = (1.0 / delta).ln();
    let (d, q) = (d as f64, q as f64);
    let gate_term = ((c[0] * (d / p_star).sqrt() + c[1] * (l / p_star).sqrt()) / sigma_z2).powi(2)
        + 2.0 / (p_star * sigma_z2);
    let count_term = 4.0 * l / (p_star * p_star);
    let design_term = ((c[2] * q.sqrt() + c[3] * l.sqrt()) / sigma_w2).powi(2) + 2.0 / sigma_w2;
    Ok(gate_term.max(count_term).max(design_term).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn unit(delta: f64, horizon: u64) -> RadiusSchedule {
        RadiusSchedule {
            sigma: 1.0,
            kappa_g: 1.0,
            kappa_h: 1.0,
            d: 1,
            q: 1,
            lambda_v: 1.0,
            lambda_u: 1.0,
            delta,
            horizon,
        }
    }

    #[test]
    fn rho_at_origin() {
        let r = unit(1.0 / E, 10);
        assert!((r.rho_x(0) - 2.0).abs() < 1e-14);
        assert!((r.rho_y(0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn varrho_unit() {
        let mut r = unit(1.0 / E, 3);
        r.horizon = 3;
        let expect = 3f64.ln().sqrt();
        assert!((r.varrho_y() - expect).abs() < 1e-14);
    }

    #[test]
    fn radii_nondecreasing() {
        let mut r = unit(0.01, 1000);
        r.d = 4;
        r.q = 3;
        r.sigma = 0.7;
        r.kappa_h = 0.1;
        let mut prev = (0.0, 0.0);
        for t in 0..2000 {
            let cur = (r.rho_x(t), r.rho_y(t));
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1 && cur.0 > 0.0);
            prev = cur;
        }
    }

    #[test]
    fn tau_without_constants() {
        let (l, p, sz, sw) = ((20f64).ln(), 0.3, 0.4, 0.5);
        let t = random_period_tau(5, 5, 0.05, p, sz, sw, [0.0; 4]).unwrap();
        let expect = (2.0 / (p * sz)).max(4.0 * l / (p * p)).max(2.0 / sw).ceil() as u64;
        assert_eq!(t, expect);
    }

    #[test]
    fn tau_reference_value() {
        // Each of the three terms evaluated by hand: 344.50, 133.14, 103.35.
        assert_eq!(random_period_tau(5, 5, 0.05, 0.3, 0.4, 0.4, [1.0; 4]).unwrap(), 345);
    }

    #[test]
    fn tau_rejects_nonpositive() {
        assert!(random_period_tau(5, 5, 0.05, 0.0, 0.4, 0.4, [1.0; 4]).is_err());
    }
}
