//! Reward-guided noise synthesis for score-based diffusion sampling.
//!
//! The crate samples from analytic Gaussian-mixture diffusion models with a
//! discretized reverse-time SDE and, at every step, replaces the Gaussian
//! noise by a noise synthesized from `K` scored candidates ("Demon" steps).
//! Rewards can come from closed-form functions, pairwise comparison oracles,
//! remote HTTP endpoints, or a human choosing candidates through the session
//! service.
//!
//! Module map:
//! - [`diffusion`]: mixture model, Karras schedule, Heun steppers, the PF-ODE map.
//! - [`demon`]: weight rules, noise synthesis, the per-step procedure, trajectories.
//! - [`rewards`]: reward specifications, estimators, comparison aggregation, remote judges.
//! - [`verification`]: Monte Carlo oracles and the statistical certification suites.
//! - [`service`]: interactive steering sessions and their HTTP API.

pub mod benchmarks;
pub mod config;
pub mod demon;
pub mod diffusion;
pub mod net;
pub mod rewards;
pub mod rng;
pub mod service;
pub mod state;
pub mod verification;

pub use demon::{
    best_of_n, demon_step, sample_trajectory, synthesize_noise, DemonConfig, DemonError, DemonKind, StepRecord,
    Temperature, Trajectory, WeightVector,
};
pub use diffusion::{heun_sde_step, karras_schedule, ode_map, DiffusionError, DynamicsParams, MixtureModel, Schedule};
pub use rewards::{RewardError, RewardSource, RewardSpec};
pub use rng::SeedPath;
pub use state::State;
