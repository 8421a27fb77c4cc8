use crate::config::{ConfigError, RunConfig};
use crate::demon::{
    commit_step, propose, selection_weights, step_score_evals, DemonConfig, DemonError, DemonKind, NoiseBank, StepMode,
    StepRecord, Trajectory,
};
use crate::diffusion::{ode_map, sample_prior, MixtureModel, Schedule};
use crate::rewards::RewardSource;
use crate::rng::{domain, SeedPath};
use crate::state::State;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session '{0}'")]
    NotFound(String),
    #[error("stale token: the step it refers to has already been submitted")]
    Stale,
    #[error("session is done")]
    Done,
    #[error("invalid choice: {0}")]
    InvalidChoice(String),
    #[error("invalid session config: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] DemonError),
}

impl From<ConfigError> for SessionError {
    fn from(e: ConfigError) -> Self {
        SessionError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingChoice,
    Running,
    Done,
}

/// One interactive steering run: a human picks among the clean previews of
/// the K candidates at every step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub config: RunConfig,
    model: MixtureModel,
    schedule: Schedule,
    initial: State,
    current: State,
    step: usize,
    pending: Option<NoiseBank>,
    token: Option<String>,
    history: Vec<StepRecord>,
    status: SessionStatus,
    /// `c(current)` when the client finished early.
    final_preview: Option<State>,
}

impl Session {
    /// Seeds a session at `x_{t_max}` and computes the first candidates.
    pub fn create(id: String, config: RunConfig) -> Result<Self, SessionError> {
        let cfg = &config.demon;
        if cfg.kind != DemonKind::Selection {
            return Err(SessionError::Config(format!("sessions need kind selection, got {}", cfg.kind)));
        }
        if cfg.t_switch.is_some() {
            return Err(SessionError::Config("sessions do not take t_switch".into()));
        }
        let (model, source) = config.resolve()?;
        if source != RewardSource::Interactive {
            return Err(SessionError::Config("sessions take their rewards from the client".into()));
        }
        let schedule = cfg.schedule()?;
        let initial = sample_prior(model.dim(), cfg.t_max, &mut SeedPath::new(cfg.seed).child(domain::PRIOR).rng());
        let mut s = Session {
            id,
            config,
            model,
            schedule,
            current: initial.clone(),
            initial,
            step: 0,
            pending: None,
            token: None,
            history: Vec::new(),
            status: SessionStatus::Running,
            final_preview: None,
        };
        s.prepare()?;
        Ok(s)
    }

    fn demon(&self) -> &DemonConfig {
        &self.config.demon
    }

    fn root(&self) -> SeedPath {
        SeedPath::new(self.demon().seed)
    }

    fn prepare(&mut self) -> Result<(), SessionError> {
        if self.step + 1 >= self.schedule.len() {
            self.status = SessionStatus::Done;
            self.pending = None;
            self.token = None;
            return Ok(());
        }
        let (t, t_next) = (self.schedule.times[self.step], self.schedule.times[self.step + 1]);
        let stream = self.root().child(domain::STEP).child(self.step as u64);
        self.pending = Some(propose(&self.model, &self.current, t, t_next, self.demon(), stream)?);
        self.token = Some(uuid::Uuid::new_v4().to_string());
        self.status = SessionStatus::AwaitingChoice;
        Ok(())
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    pub fn current(&self) -> &State {
        &self.current
    }

    pub fn previews(&self) -> &[State] {
        self.pending.as_ref().map(|b| b.previews.as_slice()).unwrap_or(&[])
    }

    /// Applies the choice for the pending step. Chosen candidates get `+1`,
    /// the rest `-1`; an empty choice takes the uniform fallback.
    pub fn choose(&mut self, token: &str, chosen: &[usize]) -> Result<(), SessionError> {
        if self.status == SessionStatus::Done {
            return Err(SessionError::Done);
        }
        if self.token.as_deref() != Some(token) {
            return Err(SessionError::Stale);
        }
        let k = self.demon().k;
        let mut sorted = chosen.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != chosen.len() {
            return Err(SessionError::InvalidChoice("duplicate candidate index".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= k) {
            return Err(SessionError::InvalidChoice(format!("candidate index {bad} out of range for K = {k}")));
        }
        let bank = self.pending.take().expect("awaiting choice has a pending bank");
        self.status = SessionStatus::Running;
        let (t, t_next) = (self.schedule.times[self.step], self.schedule.times[self.step + 1]);
        let delta = t - t_next;
        let outcome = selection_weights(&sorted, k).and_then(|w| {
            commit_step(&self.model, &self.current, t, delta, self.demon(), &bank.noises, &w).map(|c| (w, c))
        });
        let (weights, (next, z_star, fell_back)) = match outcome {
            Ok(v) => v,
            Err(e) => {
                self.pending = Some(bank);
                self.status = SessionStatus::AwaitingChoice;
                return Err(e.into());
            }
        };
        let labels = (0..k).map(|i| if sorted.binary_search(&i).is_ok() { 1.0 } else { -1.0 }).collect();
        self.history.push(StepRecord {
            step: self.step,
            t,
            delta,
            mode: StepMode::Demon,
            state_before: self.current.clone(),
            estimates: labels,
            weights: weights.weights,
            z_star,
            tau: weights.tau,
            mu_hat: weights.mu_hat,
            baseline: None,
            degenerate_weights: weights.degenerate,
            degenerate_combination: fell_back,
            reward_queries: k,
            score_evals: step_score_evals(k, t_next, self.demon()),
            chosen: Some(sorted),
            comparisons: None,
        });
        self.current = next;
        self.step += 1;
        self.token = None;
        self.prepare()
    }

    /// Ends the session at the current state.
    pub fn finish(&mut self) -> Result<(), SessionError> {
        if self.status == SessionStatus::Done {
            return Ok(());
        }
        let t = self.schedule.times[self.step];
        let est = self.demon().estimator();
        self.final_preview = Some(
            ode_map(&self.model, &self.current, t, est.ode_steps, est.t_floor, est.rho).map_err(DemonError::from)?,
        );
        self.pending = None;
        self.token = None;
        self.status = SessionStatus::Done;
        Ok(())
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            config: self.demon().clone(),
            initial_state: self.initial.clone(),
            steps: self.history.clone(),
            final_state: self.current.clone(),
            final_reward: None,
            reward_queries: self.history.iter().map(|s| s.reward_queries).sum(),
            score_evals: self.history.iter().map(|s| s.score_evals).sum(),
        }
    }

    pub fn view(&self) -> Value {
        let candidates: Vec<Value> =
            self.previews().iter().enumerate().map(|(index, p)| json!({"index": index, "preview": p})).collect();
        let mut v = json!({
            "id": self.id,
            "status": self.status,
            "step": self.step,
            "t": self.schedule.times[self.step],
            "token": self.token,
            "candidates": candidates,
            "history": self.history.iter().map(|r| json!({"step": r.step, "t": r.t, "chosen": r.chosen})).collect::<Vec<_>>(),
        });
        if self.status == SessionStatus::Done {
            v["final_state"] = json!(self.current);
            if let Some(p) = &self.final_preview {
                v["final_preview"] = json!(p);
            }
        }
        v
    }
}
