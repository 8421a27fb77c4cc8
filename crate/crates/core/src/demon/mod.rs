//! The Demon procedure: score K candidate noises through the PF-ODE preview
//! of each candidate step, weight them, and seed the actual step with the
//! sphere-projected combination.

mod config;
mod noise;
mod step;
mod trajectory;
mod weights;

pub use config::{Centering, DemonConfig, DemonKind};
pub use noise::{sphere_project, synthesize_noise, synthesize_or_fallback};
pub use step::{commit_step, demon_step, propose, step_score_evals, NoiseBank, StepMode, StepRecord};
pub use trajectory::{best_of_n, replay, sample_trajectory, sample_trajectory_at, BestOfN, Trajectory};
pub use weights::{boltzmann_weights, selection_weights, tanh_weights, tanh_weights_about, Temperature, WeightVector};

use crate::diffusion::DiffusionError;
use crate::rewards::RewardError;
use crate::state::State;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DemonError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("degenerate weight combination")]
    DegenerateCombination,
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("step {step} at t = {t}: {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<DemonError>,
        /// Candidate previews computed before the failure.
        previews: Vec<State>,
    },
    #[error("replay diverged: {0}")]
    Replay(String),
}
