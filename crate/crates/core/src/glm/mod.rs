//! Generalized linear zero-inflated contextual bandits and their baselines.

mod design;
mod fit;
mod integrated;
mod link;
mod policies;
mod radii;

pub use design::DesignMatrix;
pub use fit::{
    fit_glm, fit_linear, project_ball, solve_projected, EstimatingEquation, FitResult, GlmEquation, LinearEquation,
    Observations, GRADIENT_TOL, MAX_ITERATIONS,
};
pub use integrated::{IntegratedFit, IntegratedProblem};
pub use link::{Link, LinkPair};
pub use policies::{
    expected_reward, first_argmax, ucb_score, ArmFeatures, ContextOracle, ContextualPolicy, GlmParams, GlmState,
    IntegratedModel, IntegratedTs, IntegratedUcb, MisspecifiedLinTs, MisspecifiedLinUcb, NaiveLinear, ZiGlmTs,
    ZiGlmUcb,
};
pub use radii::{random_period_tau, RadiusSchedule};
