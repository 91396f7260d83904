use rand::RngCore;

use super::Policy;

/// Always pulls one arm. With the best arm it is the zero-regret reference.
#[derive(Debug, Clone)]
pub struct FixedArm {
    k: usize,
    arm: usize,
}

impl FixedArm {
    pub fn new(k: usize, arm: usize) -> Self {
        assert!(arm < k, "arm {arm} out of range for {k} arms");
        FixedArm { k, arm }
    }
}

impl Policy for FixedArm {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn select(&mut self, _round: u64, _rng: &mut dyn RngCore) -> usize {
        self.arm
    }

    fn update(&mut self, _arm: usize, _reward: f64, _nonzero: bool, _round: u64) {}
}
