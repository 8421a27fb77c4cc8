use super::{RewardError, RewardSpec};
use crate::diffusion::{ode_map, MixtureModel};
use serde::{Deserialize, Serialize};

/// How `r o c` is computed: Heun ODE steps and the grid the PF-ODE map uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub ode_steps: usize,
    pub t_floor: f64,
    pub rho: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings { ode_steps: 20, t_floor: 0.002, rho: 7.0 }
    }
}

/// `(r o c)(x, t)`: the reward of the PF-ODE completion of `x`.
pub fn estimate_reward(
    model: &MixtureModel,
    x: &[f64],
    t: f64,
    spec: &RewardSpec,
    est: &EstimatorSettings,
) -> Result<f64, RewardError> {
    let clean = ode_map(model, x, t, est.ode_steps, est.t_floor, est.rho)?;
    spec.eval(&clean)
}
