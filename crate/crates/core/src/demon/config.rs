use super::{DemonError, Temperature};
use crate::diffusion::{karras_schedule, DynamicsParams, Schedule};
use crate::rewards::EstimatorSettings;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemonKind {
    Tanh,
    Boltzmann,
    /// `+1/-1` labels from a chooser (comparison source or a human).
    Selection,
    BestOfN,
    /// Plain SDE sampling with sphere-projected noise.
    None,
}

impl fmt::Display for DemonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemonKind::Tanh => "tanh",
            DemonKind::Boltzmann => "boltzmann",
            DemonKind::Selection => "selection",
            DemonKind::BestOfN => "best_of_n",
            DemonKind::None => "none",
        })
    }
}

impl FromStr for DemonKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tanh" => Ok(DemonKind::Tanh),
            "boltzmann" => Ok(DemonKind::Boltzmann),
            "selection" => Ok(DemonKind::Selection),
            "best_of_n" | "bon" => Ok(DemonKind::BestOfN),
            "none" | "plain" => Ok(DemonKind::None),
            _ => Err(format!("unknown demon kind '{s}'")),
        }
    }
}

/// What the tanh rule centres the estimates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Mean of the K candidate estimates.
    #[default]
    Mean,
    /// Estimate at the current state, one extra reward query per step.
    Current,
}

/// Every sampling hyperparameter of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemonConfig {
    pub kind: DemonKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub beta: f64,
    pub rho: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// `None` selects the per-kind default.
    pub tau: Option<Temperature>,
    pub ode_steps: usize,
    /// Steps starting below this time take a plain ODE step.
    pub t_switch: Option<f64>,
    pub center: Centering,
    /// Best-of-N sample count; defaults to `K (T - 1)`.
    pub n: Option<usize>,
    pub seed: u64,
}

impl Default for DemonConfig {
    fn default() -> Self {
        DemonConfig {
            kind: DemonKind::Tanh,
            k: 16,
            steps: 64,
            beta: 0.1,
            rho: 7.0,
            t_min: 0.002,
            t_max: 14.648,
            tau: None,
            ode_steps: 20,
            t_switch: None,
            center: Centering::Mean,
            n: None,
            seed: 0,
        }
    }
}

impl DemonConfig {
    /// Defaults for `kind`; plain sampling uses a single noise.
    pub fn for_kind(kind: DemonKind) -> Self {
        let k = if kind == DemonKind::None { 1 } else { 16 };
        DemonConfig { kind, k, ..Default::default() }
    }

    pub fn temperature(&self) -> Temperature {
        self.tau.unwrap_or(match self.kind {
            DemonKind::Boltzmann => Temperature::Fixed(1e-10),
            _ => Temperature::Adaptive,
        })
    }

    pub fn best_of_n_count(&self) -> usize {
        self.n.unwrap_or(self.k * (self.steps.saturating_sub(1)))
    }

    pub fn validate(&self) -> Result<(), DemonError> {
        let bad = |m: String| Err(DemonError::Config(m));
        if self.k < 1 {
            return bad("K must be at least 1".into());
        }
        if self.kind == DemonKind::None && self.k != 1 {
            return bad(format!("kind none requires K = 1, got {}", self.k));
        }
        if self.kind == DemonKind::Selection && self.k < 2 {
            return bad("selection needs at least two candidates".into());
        }
        if self.ode_steps < 1 {
            return bad("ode_steps must be at least 1".into());
        }
        if self.kind == DemonKind::Tanh && self.temperature() == Temperature::Infinite {
            return bad("tanh weights need a finite temperature".into());
        }
        if self.center == Centering::Current && self.kind != DemonKind::Tanh {
            return bad("centering on the current state applies to tanh only".into());
        }
        if let Some(ts) = self.t_switch {
            if !(ts.is_finite() && ts >= 0.0) {
                return bad(format!("t_switch must be a nonnegative time, got {ts}"));
            }
        }
        if self.kind == DemonKind::BestOfN && self.best_of_n_count() < 1 {
            return bad("best-of-n needs n >= 1".into());
        }
        self.temperature().validate()?;
        DynamicsParams::new(self.beta)?;
        self.schedule()?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<Schedule, DemonError> {
        Ok(karras_schedule(self.steps, self.rho, self.t_min, self.t_max)?)
    }

    pub fn dynamics(&self) -> DynamicsParams {
        DynamicsParams { beta: self.beta }
    }

    pub fn estimator(&self) -> EstimatorSettings {
        EstimatorSettings { ode_steps: self.ode_steps, t_floor: self.t_min, rho: self.rho }
    }

    /// Whether the step starting at `t` runs the Demon procedure.
    pub fn guided_at(&self, t: f64) -> bool {
        self.t_switch.is_none_or(|ts| t >= ts)
    }
}
