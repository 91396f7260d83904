use rand::RngCore;

use super::zi_ts::ClipMode;
use super::{argmax_random_tie, forced_arm, Policy};
use crate::distributions::{sample_clipped_normal, CLIP_NONE};
use crate::error::{invalid, Result};

const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectTsParams {
    pub horizon: u64,
    pub gamma: f64,
    pub rho: f64,
    pub clip_mode: ClipMode,
}

impl DirectTsParams {
    pub fn new(horizon: u64) -> Self {
        DirectTsParams {
            horizon,
            gamma: 4.0,
            rho: 0.75,
            clip_mode: ClipMode::Floor,
        }
    }
}

/// Clipped-Gaussian Thompson sampling on the raw reward, ignoring the
/// zero-inflated structure. The posterior variance is the running sample
/// variance over `rho * c`; the clip is
/// `R_bar + sqrt(gamma/(4c) log+(T/(4cK)))`.
#[derive(Debug, Clone)]
pub struct DirectTs {
    count: Vec<u64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    params: DirectTsParams,
}

impl DirectTs {
    pub fn new(k: usize, params: DirectTsParams) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one arm"));
        }
        if !(params.gamma >= 4.0) || !(params.rho > 0.5 && params.rho < 1.0) {
            return Err(invalid("direct_ts", "need gamma >= 4 and rho in (1/2, 1)"));
        }
        Ok(DirectTs {
            count: vec![0; k],
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
            params,
        })
    }

    pub fn clip(&self, arm: usize) -> f64 {
        let c = self.count[arm].max(1) as f64;
        let k = self.count.len() as f64;
        let mean = self.sum[arm] / c;
        let lp = (self.params.horizon as f64 / (4.0 * c * k)).ln().max(0.0);
        mean + (self.params.gamma / (4.0 * c) * lp).sqrt()
    }

    fn variance(&self, arm: usize) -> f64 {
        let n = self.count[arm] as f64;
        if self.count[arm] < 2 {
            return VARIANCE_FLOOR;
        }
        let mean = self.sum[arm] / n;
        ((self.sum_sq[arm] - n * mean * mean) / (n - 1.0)).max(VARIANCE_FLOOR)
    }
}

impl Policy for DirectTs {
    fn num_arms(&self) -> usize {
        self.count.len()
    }

    fn select(&mut self, round: u64, rng: &mut dyn RngCore) -> usize {
        if let Some(arm) = forced_arm(round, self.count.len()) {
            return arm;
        }
        let draws: Vec<f64> = (0..self.count.len())
            .map(|a| {
                let c = self.count[a].max(1) as f64;
                let mean = self.sum[a] / c;
                let var = self.variance(a) / (self.params.rho * c);
                let clip = self.clip(a);
                match self.params.clip_mode {
                    ClipMode::Floor => sample_clipped_normal(mean, var, clip, rng),
                    ClipMode::Cap => sample_clipped_normal(mean, var, CLIP_NONE, rng).min(clip),
                }
            })
            .collect();
        argmax_random_tie(&draws, rng)
    }

    fn update(&mut self, arm: usize, reward: f64, _nonzero: bool, _round: u64) {
        self.count[arm] += 1;
        self.sum[arm] += reward;
        self.sum_sq[arm] += reward * reward;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    #[test]
    fn single_arm() {
        let mut p = DirectTs::new(1, DirectTsParams::new(100)).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        for t in 1..30 {
            assert_eq!(p.select(t, &mut rng), 0);
            p.update(0, (t % 2) as f64, t % 2 == 1, t);
        }
    }

    #[test]
    fn identical_arms_split_evenly() {
        let mut p = DirectTs::new(2, DirectTsParams::new(100_000)).unwrap();
        for arm in 0..2 {
            for i in 0..20 {
                let r = if i % 2 == 0 { 1.0 } else { 0.0 };
                p.update(arm, r, r != 0.0, 1);
            }
        }
        let mut rng = SimRng::seed_from_u64(1);
        let n = 10_000;
        let hits = (0..n).filter(|_| p.select(100, &mut rng) == 0).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn clip_equals_mean_at_log_zero() {
        // T = 4 c K with K = 2, c = 10
        let mut p = DirectTs::new(2, DirectTsParams::new(80)).unwrap();
        for _ in 0..10 {
            p.update(0, 2.0, true, 1);
        }
        assert_eq!(p.clip(0), 2.0);
    }
}
