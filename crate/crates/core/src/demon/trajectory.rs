use super::{demon_step, DemonConfig, DemonError, DemonKind, StepMode, StepRecord};
use crate::diffusion::{heun_sde_step, sample_prior, DynamicsParams, MixtureModel};
use crate::rewards::{RequestMeta, RewardSource};
use crate::rng::{domain, SeedPath};
use crate::state::State;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: DemonConfig,
    pub initial_state: State,
    pub steps: Vec<StepRecord>,
    pub final_state: State,
    /// `None` for sources without scalar rewards.
    pub final_reward: Option<f64>,
    pub reward_queries: usize,
    pub score_evals: u64,
}

impl Trajectory {
    /// One JSON object per step, then the final record.
    pub fn to_jsonl(&self, wall_time_ms: Option<f64>) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let line = json!({
                "t": s.t,
                "delta": s.delta,
                "estimates": s.estimates,
                "weights": s.weights,
                "tau": s.tau,
                "mu_hat": s.mu_hat,
                "z_star_norm": s.z_star_norm(),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out.push_str(
            &final_record(&self.final_state, self.final_reward, self.reward_queries, wall_time_ms).to_string(),
        );
        out.push('\n');
        out
    }
}

pub(crate) fn final_record(
    state: &State,
    reward: Option<f64>,
    queries: usize,
    wall_time_ms: Option<f64>,
) -> serde_json::Value {
    json!({
        "final_state": state,
        "final_reward": reward,
        "reward_queries": queries,
        "wall_time_ms": wall_time_ms,
    })
}

/// Full run from `x_{t_max}` to `t_min` seeded by `cfg.seed`.
pub fn sample_trajectory(
    model: &MixtureModel,
    cfg: &DemonConfig,
    source: &RewardSource,
) -> Result<Trajectory, DemonError> {
    sample_trajectory_at(model, cfg, source, SeedPath::new(cfg.seed))
}

/// Full run drawing all randomness below `root`.
pub fn sample_trajectory_at(
    model: &MixtureModel,
    cfg: &DemonConfig,
    source: &RewardSource,
    root: SeedPath,
) -> Result<Trajectory, DemonError> {
    cfg.validate()?;
    if cfg.kind == DemonKind::BestOfN {
        return Err(DemonError::Config("use best_of_n for best-of-n runs".into()));
    }
    if cfg.kind != DemonKind::None {
        source.validate(model.dim())?;
    }
    let schedule = cfg.schedule()?;
    let x0 = sample_prior(model.dim(), cfg.t_max, &mut root.child(domain::PRIOR).rng());
    let mut x = x0.clone();
    let mut steps = Vec::with_capacity(schedule.len() - 1);
    for i in 0..schedule.len() - 1 {
        let (t, t_next) = (schedule.times[i], schedule.times[i + 1]);
        let (next, rec) = demon_step(model, &x, i, t, t_next, cfg, source, root)?;
        x = next;
        steps.push(rec);
    }
    let final_reward = source.final_reward(&x, RequestMeta { t: cfg.t_min, step: steps.len() })?;
    Ok(Trajectory {
        config: cfg.clone(),
        initial_state: x0,
        reward_queries: steps.iter().map(|s| s.reward_queries).sum(),
        score_evals: steps.iter().map(|s| s.score_evals).sum(),
        steps,
        final_state: x,
        final_reward,
    })
}

/// Re-applies every recorded `z*` and checks each intermediate state.
pub fn replay(model: &MixtureModel, traj: &Trajectory) -> Result<State, DemonError> {
    let mut x = traj.initial_state.clone();
    for rec in &traj.steps {
        if rec.state_before != x {
            return Err(DemonError::Replay(format!("state before step {} differs", rec.step)));
        }
        let params = match rec.mode {
            StepMode::Ode => DynamicsParams::ode(),
            _ => traj.config.dynamics(),
        };
        x = heun_sde_step(model, &x, &rec.z_star, rec.t, rec.delta, params)?;
    }
    if x != traj.final_state {
        return Err(DemonError::Replay("final state differs".into()));
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOfN {
    pub best_index: usize,
    pub best_state: State,
    pub best_reward: f64,
    pub rewards: Vec<f64>,
    /// One reward query per sample.
    pub reward_queries: usize,
    pub score_evals: u64,
}

/// `n` independent plain trajectories; the highest final reward wins, ties
/// going to the lowest index. Trajectory `i` uses `root.child(TRAJECTORY).child(i)`.
pub fn best_of_n(
    model: &MixtureModel,
    cfg: &DemonConfig,
    source: &RewardSource,
    n: usize,
    root: SeedPath,
) -> Result<BestOfN, DemonError> {
    if n < 1 {
        return Err(DemonError::Config("best-of-n needs n >= 1".into()));
    }
    source.validate(model.dim())?;
    if !matches!(source, RewardSource::ClosedForm { .. } | RewardSource::External { .. }) {
        return Err(DemonError::Config("best-of-n needs a scalar reward source".into()));
    }
    let plain = DemonConfig { kind: DemonKind::None, k: 1, n: None, ..cfg.clone() };
    let runs: Vec<(State, u64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let tr = sample_trajectory_at(
                model,
                &plain,
                &RewardSource::Interactive,
                root.child(domain::TRAJECTORY).child(i as u64),
            )?;
            Ok((tr.final_state, tr.score_evals))
        })
        .collect::<Result<_, DemonError>>()?;
    let mut rewards = Vec::with_capacity(n);
    for (i, (x, _)) in runs.iter().enumerate() {
        let r = source
            .final_reward(x, RequestMeta { t: cfg.t_min, step: i })?
            .ok_or_else(|| DemonError::Config("reward source returned no score".into()))?;
        rewards.push(r);
    }
    let mut best = 0;
    for i in 1..n {
        if rewards[i] > rewards[best] {
            best = i;
        }
    }
    Ok(BestOfN {
        best_index: best,
        best_state: runs[best].0.clone(),
        best_reward: rewards[best],
        reward_queries: n,
        score_evals: runs.iter().map(|r| r.1).sum(),
        rewards,
    })
}
