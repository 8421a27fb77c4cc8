use super::{
    boltzmann_weights, sphere_project, synthesize_or_fallback, tanh_weights, tanh_weights_about, Centering,
    DemonConfig, DemonError, DemonKind, WeightVector,
};
use crate::diffusion::{heun_sde_step, ode_map, ode_steps_taken, standard_normal, MixtureModel};
use crate::rewards::{ComparisonRecord, RequestMeta, RewardSource};
use crate::rng::{domain, SeedPath};
use crate::state::{norm, State};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The K noises of one step, their candidate next states and clean previews.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBank {
    pub noises: Vec<State>,
    pub candidates: Vec<State>,
    pub previews: Vec<State>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    Demon,
    Plain,
    /// Below `t_switch`: deterministic ODE step.
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub delta: f64,
    pub mode: StepMode,
    pub state_before: State,
    pub estimates: Vec<f64>,
    pub weights: Vec<f64>,
    pub z_star: State,
    pub tau: Option<f64>,
    pub mu_hat: Option<f64>,
    /// Estimate at the current state when the tanh rule centres on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
    pub degenerate_weights: bool,
    pub degenerate_combination: bool,
    pub reward_queries: usize,
    pub score_evals: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<Vec<ComparisonRecord>>,
}

/// Score-function evaluations of one guided step with `k` candidates.
pub fn step_score_evals(k: usize, t_next: f64, cfg: &DemonConfig) -> u64 {
    let per_candidate = 2 + 2 * ode_steps_taken(t_next, cfg.t_min, cfg.ode_steps) as u64;
    k as u64 * per_candidate + 2
}

/// Draws the step's K noises and forms candidates and their previews.
/// Candidate `k` uses stream `step_stream.child(k)`.
pub fn propose(
    model: &MixtureModel,
    x: &State,
    t: f64,
    t_next: f64,
    cfg: &DemonConfig,
    step_stream: SeedPath,
) -> Result<NoiseBank, DemonError> {
    let dyn_params = cfg.dynamics();
    let est = cfg.estimator();
    let delta = t - t_next;
    let out: Vec<(State, State, State)> = (0..cfg.k)
        .into_par_iter()
        .map(|k| {
            let z = State(standard_normal(model.dim(), &mut step_stream.child(k as u64).rng()));
            let cand = heun_sde_step(model, x, &z, t, delta, dyn_params)?;
            let preview = ode_map(model, &cand, t_next, est.ode_steps, est.t_floor, est.rho)?;
            Ok((z, cand, preview))
        })
        .collect::<Result<_, DemonError>>()?;
    let mut bank = NoiseBank { noises: Vec::new(), candidates: Vec::new(), previews: Vec::new() };
    for (z, c, p) in out {
        bank.noises.push(z);
        bank.candidates.push(c);
        bank.previews.push(p);
    }
    Ok(bank)
}

/// Synthesizes `z*` from `weights` and takes the step with it.
pub fn commit_step(
    model: &MixtureModel,
    x: &State,
    t: f64,
    delta: f64,
    cfg: &DemonConfig,
    noises: &[State],
    weights: &WeightVector,
) -> Result<(State, State, bool), DemonError> {
    let (z_star, fell_back) = synthesize_or_fallback(noises, &weights.weights)?;
    let next = heun_sde_step(model, x, &z_star, t, delta, cfg.dynamics())?;
    Ok((next, z_star, fell_back))
}

fn wrap(step: usize, t: f64, previews: Vec<State>) -> impl FnOnce(DemonError) -> DemonError {
    move |e| DemonError::Step { step, t, source: Box::new(e), previews }
}

/// One step of the sampler from `t` to `t_next`. Randomness is drawn from
/// `root.child(STEP).child(step)` and `root.child(REWARD).child(step)`.
#[allow(clippy::too_many_arguments)]
pub fn demon_step(
    model: &MixtureModel,
    x: &State,
    step: usize,
    t: f64,
    t_next: f64,
    cfg: &DemonConfig,
    source: &RewardSource,
    root: SeedPath,
) -> Result<(State, StepRecord), DemonError> {
    let delta = t - t_next;
    let step_stream = root.child(domain::STEP).child(step as u64);
    let mut rec = StepRecord {
        step,
        t,
        delta,
        mode: StepMode::Demon,
        state_before: x.clone(),
        estimates: Vec::new(),
        weights: Vec::new(),
        z_star: State::zeros(x.len()),
        tau: None,
        mu_hat: None,
        baseline: None,
        degenerate_weights: false,
        degenerate_combination: false,
        reward_queries: 0,
        score_evals: 2,
        chosen: None,
        comparisons: None,
    };

    if !cfg.guided_at(t) {
        rec.mode = StepMode::Ode;
        let next = heun_sde_step(model, x, &rec.z_star, t, delta, crate::diffusion::DynamicsParams::ode())
            .map_err(|e| wrap(step, t, Vec::new())(e.into()))?;
        return Ok((next, rec));
    }

    match cfg.kind {
        DemonKind::None => {
            rec.mode = StepMode::Plain;
            let z = standard_normal(model.dim(), &mut step_stream.child(0).rng());
            let z_star = sphere_project(&z).map_err(wrap(step, t, Vec::new()))?;
            let next = heun_sde_step(model, x, &z_star, t, delta, cfg.dynamics())
                .map_err(|e| wrap(step, t, Vec::new())(e.into()))?;
            rec.z_star = z_star;
            Ok((next, rec))
        }
        DemonKind::BestOfN => Err(DemonError::Config("best-of-n is not a per-step rule".into())),
        DemonKind::Tanh | DemonKind::Boltzmann | DemonKind::Selection => {
            let bank = propose(model, x, t, t_next, cfg, step_stream).map_err(wrap(step, t, Vec::new()))?;
            let meta = RequestMeta { t: t_next, step };
            let reward_stream = root.child(domain::REWARD).child(step as u64);
            let scored = source
                .score_previews(&bank.previews, meta, reward_stream)
                .map_err(|e| wrap(step, t, bank.previews.clone())(e.into()))?;
            rec.reward_queries = scored.queries;
            rec.score_evals = step_score_evals(cfg.k, t_next, cfg);
            let weights = match cfg.kind {
                DemonKind::Tanh if cfg.center == Centering::Current => {
                    let est = cfg.estimator();
                    let here = ode_map(model, x, t, est.ode_steps, est.t_floor, est.rho)
                        .map_err(|e| wrap(step, t, bank.previews.clone())(e.into()))?;
                    let base = source
                        .score_previews(std::slice::from_ref(&here), RequestMeta { t, step }, reward_stream.child(1))
                        .map_err(|e| wrap(step, t, bank.previews.clone())(e.into()))?;
                    rec.reward_queries += base.queries;
                    rec.score_evals += 2 * est.ode_steps as u64;
                    rec.baseline = Some(base.estimates[0]);
                    tanh_weights_about(&scored.estimates, base.estimates[0], cfg.temperature())
                }
                DemonKind::Tanh => tanh_weights(&scored.estimates, cfg.temperature()),
                DemonKind::Boltzmann => boltzmann_weights(&scored.estimates, cfg.temperature()),
                _ => {
                    if !source.is_comparison() {
                        return Err(wrap(step, t, bank.previews)(DemonError::Config(
                            "selection runs need a comparison source or a steering session".into(),
                        )));
                    }
                    let chosen: Vec<usize> = (0..cfg.k).filter(|&i| scored.estimates[i] > 0.0).collect();
                    let w = super::selection_weights(&chosen, cfg.k);
                    rec.chosen = Some(chosen);
                    w
                }
            }
            .map_err(wrap(step, t, bank.previews.clone()))?;
            let (next, z_star, fell_back) = commit_step(model, x, t, delta, cfg, &bank.noises, &weights)
                .map_err(wrap(step, t, bank.previews.clone()))?;
            rec.estimates = scored.estimates;
            rec.comparisons = scored.comparisons;
            rec.tau = weights.tau;
            rec.mu_hat = weights.mu_hat;
            rec.degenerate_weights = weights.degenerate;
            rec.weights = weights.weights;
            rec.degenerate_combination = fell_back;
            rec.z_star = z_star;
            Ok((next, rec))
        }
    }
}

impl StepRecord {
    pub fn z_star_norm(&self) -> f64 {
        norm(&self.z_star)
    }
}
