//! Zero-inflated bandits: concentration bounds, policies, environments and a
//! replication harness.

pub mod concentration;
pub mod distributions;
pub mod env;
pub mod error;
pub mod glm;
pub mod harness;
pub mod mab;
pub mod rng;

pub use error::{Result, ZibError};
pub use concentration::{ConfidenceLevel, TailSpec};
pub use distributions::{NoiseModel, ZiArm};
pub use env::{CbEnv, CbEnvSpec, MabEnv, MabEnvSpec};
pub use glm::{Link, LinkPair};
pub use harness::{run_experiment, ExperimentConfig, ExperimentResult};
pub use mab::{ArmState, Policy};
pub use rng::SimRng;
