//! Analytic diffusion model, time grid, and numerical steppers.
//!
//! The reverse-time SDE integrated here is
//! `dx = -(t + beta t^2) grad log p(x, t) dt + sqrt(2 beta) t dw`, with
//! `p(., t)` the data distribution convolved with `N(0, t^2 I)`. Setting
//! `beta = 0` gives the probability-flow ODE.

mod dynamics;
mod model;
mod schedule;

pub use dynamics::{
    diffusion_coeff, drift, heun_sde_step, ode_map, ode_steps_taken, sample_prior, standard_normal, DynamicsParams,
};
pub use model::{mixture_score, Component, MixtureModel};
pub use schedule::{karras_schedule, Schedule};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffusionError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("density underflow at t = {t}")]
    DensityUnderflow { t: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
}
