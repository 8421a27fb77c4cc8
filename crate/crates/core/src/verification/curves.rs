use super::report::{LemmaReport, Relation};
use crate::demon::{best_of_n, sample_trajectory_at, step_score_evals, DemonConfig, DemonError, DemonKind};
use crate::diffusion::MixtureModel;
use crate::rewards::RewardSource;
use crate::rng::SeedPath;
use crate::state::{sample_std, stable_mean};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSettings {
    pub seeds: usize,
    pub k: usize,
    /// Schedule length of the headline comparison.
    pub steps: usize,
    pub beta: f64,
    /// Schedule lengths of the 20-step-estimator runs on the cost curve.
    pub cost_budgets: Vec<usize>,
    /// Schedule lengths whose query budgets `K (T - 1)` form the query curve.
    pub query_budgets: Vec<usize>,
    /// Query budgets with shorter schedules are reported but not gated.
    pub min_gated_steps: usize,
    pub record_wall_time: bool,
}

impl Default for CurveSettings {
    fn default() -> Self {
        CurveSettings {
            seeds: 50,
            k: 16,
            steps: 64,
            beta: 0.1,
            cost_budgets: vec![16, 32, 64],
            query_budgets: vec![8, 16, 32, 64],
            min_gated_steps: 20,
            record_wall_time: false,
        }
    }
}

/// One point of an improvement curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub steps: usize,
    pub ode_steps: usize,
    pub reward_queries: usize,
    pub score_evals: u64,
    pub mean: f64,
    pub std: f64,
    pub rewards: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl CurvePoint {
    fn stderr(&self) -> f64 {
        self.std / (self.rewards.len() as f64).sqrt()
    }
}

/// Score evaluations a run of `cfg` spends, without running it.
pub fn planned_score_evals(cfg: &DemonConfig) -> Result<u64, DemonError> {
    let schedule = cfg.schedule()?;
    Ok(schedule
        .times
        .windows(2)
        .map(|w| match cfg.kind {
            DemonKind::None => 2,
            _ if !cfg.guided_at(w[0]) => 2,
            _ => step_score_evals(cfg.k, w[1], cfg),
        })
        .sum())
}

/// Longest schedule for `cfg` whose planned cost stays within `budget`.
pub fn steps_within(cfg: &DemonConfig, budget: u64) -> Result<usize, DemonError> {
    let cost = |t: usize| planned_score_evals(&DemonConfig { steps: t, ..cfg.clone() });
    if cost(2)? > budget {
        return Err(DemonError::Config(format!("budget {budget} below a two-point schedule")));
    }
    let (mut lo, mut hi) = (2usize, 4usize);
    while cost(hi)? <= budget {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if cost(mid)? <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn seed_root(root: SeedPath, s: usize) -> SeedPath {
    root.child(s as u64)
}

fn demon_point(
    model: &MixtureModel,
    cfg: &DemonConfig,
    source: &RewardSource,
    method: &str,
    set: &CurveSettings,
    root: SeedPath,
) -> Result<CurvePoint, DemonError> {
    let start = Instant::now();
    let mut rewards = Vec::with_capacity(set.seeds);
    let (mut queries, mut evals) = (0, 0);
    for s in 0..set.seeds {
        let tr = sample_trajectory_at(model, cfg, source, seed_root(root, s))?;
        rewards.push(tr.final_reward.ok_or_else(|| DemonError::Config("curves need a scalar reward".into()))?);
        queries = tr.reward_queries;
        evals = tr.score_evals;
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(CurvePoint {
        method: method.into(),
        steps: cfg.steps,
        ode_steps: cfg.ode_steps,
        reward_queries: queries,
        score_evals: evals,
        mean: stable_mean(&rewards),
        std: sample_std(&rewards),
        rewards,
        wall_ms: set.record_wall_time.then(|| 1e3 * elapsed / set.seeds as f64),
    })
}

fn best_of_n_point(
    model: &MixtureModel,
    cfg: &DemonConfig,
    source: &RewardSource,
    set: &CurveSettings,
    root: SeedPath,
) -> Result<CurvePoint, DemonError> {
    let n = cfg.best_of_n_count();
    let start = Instant::now();
    let mut rewards = Vec::with_capacity(set.seeds);
    let mut evals = 0;
    for s in 0..set.seeds {
        let run = best_of_n(model, cfg, source, n, seed_root(root, s))?;
        rewards.push(run.best_reward);
        evals = run.score_evals;
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(CurvePoint {
        method: "best_of_n".into(),
        steps: cfg.steps,
        ode_steps: 0,
        reward_queries: n,
        score_evals: evals,
        mean: stable_mean(&rewards),
        std: sample_std(&rewards),
        rewards,
        wall_ms: set.record_wall_time.then(|| 1e3 * elapsed / set.seeds as f64),
    })
}

/// Improvement curves and their checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResults {
    pub points: Vec<CurvePoint>,
    pub reports: Vec<LemmaReport>,
}

/// Tanh against plain sampling and Best-of-N at the headline budget, the
/// query-budget curve, and the 1-step vs 20-step estimator cost curve. Seed
/// `s` of every method uses `root.child(s)`.
pub fn improvement_curves(
    model: &MixtureModel,
    source: &RewardSource,
    set: &CurveSettings,
    root: SeedPath,
) -> Result<CurveResults, DemonError> {
    if set.seeds < 2 {
        return Err(DemonError::Config("curves need at least two seeds".into()));
    }
    let tanh_at = |steps: usize, ode_steps: usize| DemonConfig {
        k: set.k,
        steps,
        beta: set.beta,
        ode_steps,
        ..DemonConfig::for_kind(DemonKind::Tanh)
    };
    let none_at = |steps: usize| DemonConfig { steps, beta: set.beta, ..DemonConfig::for_kind(DemonKind::None) };
    let mut points = Vec::new();
    let mut reports = Vec::new();

    let tanh = demon_point(model, &tanh_at(set.steps, 20), source, "tanh", set, root)?;
    let none = demon_point(model, &none_at(set.steps), source, "none", set, root)?;
    let bon = best_of_n_point(model, &tanh_at(set.steps, 20), source, set, root)?;
    let pooled = (tanh.stderr().powi(2) + none.stderr().powi(2)).sqrt();
    reports.push(
        LemmaReport::new("curves_tanh_vs_none", tanh.mean - none.mean, 3.0 * pooled, 0.0, Relation::AtLeast)
            .with("tanh_mean", tanh.mean)
            .with("none_mean", none.mean)
            .with("pooled_stderr", pooled),
    );
    let wins = tanh.rewards.iter().zip(&bon.rewards).filter(|(a, b)| a > b).count();
    reports.push(
        LemmaReport::new("curves_tanh_vs_best_of_n", wins as f64 / set.seeds as f64, 0.8, 0.0, Relation::AtLeast)
            .with("wins", wins)
            .with("seeds", set.seeds)
            .with("best_of_n", bon.reward_queries)
            .with("best_of_n_mean", bon.mean),
    );

    let mut query_ok = true;
    let mut per_budget = Vec::new();
    let mut none_means = Vec::new();
    for &steps in &set.query_budgets {
        let (t, b, n) = if steps == set.steps {
            (tanh.clone(), bon.clone(), none.clone())
        } else {
            (
                demon_point(model, &tanh_at(steps, 20), source, "tanh", set, root)?,
                best_of_n_point(model, &tanh_at(steps, 20), source, set, root)?,
                demon_point(model, &none_at(steps), source, "none", set, root)?,
            )
        };
        let ahead = t.mean >= b.mean;
        if steps >= set.min_gated_steps {
            query_ok &= ahead;
        }
        per_budget.push(serde_json::json!({
            "steps": steps,
            "queries": b.reward_queries,
            "tanh_mean": t.mean,
            "best_of_n_mean": b.mean,
            "tanh_ahead": ahead,
            "gated": steps >= set.min_gated_steps,
        }));
        none_means.push((n.mean, n.stderr()));
        points.extend([t, b, n]);
    }
    reports.push(LemmaReport::flag("curves_query_budget", query_ok).with("budgets", per_budget));
    let (ref_mean, ref_se) = none_means.last().copied().unwrap_or((none.mean, none.stderr()));
    let max_dev = none_means
        .iter()
        .map(|(m, se)| (m - ref_mean).abs() / (se * se + ref_se * ref_se).sqrt().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    reports.push(
        LemmaReport::new("curves_none_flat", max_dev, 0.0, 3.0, Relation::AtMost)
            .with("max_deviation_in_pooled_stderr", max_dev),
    );

    let mut cost_ok = true;
    let mut pairs = Vec::new();
    for &steps in &set.cost_budgets {
        let slow_cfg = tanh_at(steps, 20);
        let budget = planned_score_evals(&slow_cfg)?;
        let fast_cfg = tanh_at(steps_within(&tanh_at(steps, 1), budget)?, 1);
        let slow =
            if steps == set.steps { tanh.clone() } else { demon_point(model, &slow_cfg, source, "tanh", set, root)? };
        let fast = demon_point(model, &fast_cfg, source, "tanh_1step", set, root)?;
        cost_ok &= fast.mean >= slow.mean;
        pairs.push(serde_json::json!({
            "budget": budget,
            "steps_20": steps,
            "steps_1": fast_cfg.steps,
            "mean_20": slow.mean,
            "mean_1": fast.mean,
            "wall_ms_20": slow.wall_ms,
            "wall_ms_1": fast.wall_ms,
        }));
        if steps != set.steps {
            points.push(slow);
        }
        points.push(fast);
    }
    reports.push(
        LemmaReport::flag("curves_matched_cost", cost_ok).with("cost_model", "score evaluations").with("pairs", pairs),
    );

    let boltz = demon_point(
        model,
        &DemonConfig { k: set.k, steps: set.steps, beta: set.beta, ..DemonConfig::for_kind(DemonKind::Boltzmann) },
        source,
        "boltzmann",
        set,
        root,
    )?;
    points.push(boltz);
    Ok(CurveResults { points, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{linear_reward, mixture_2d};

    #[test]
    fn planned_cost_matches_runs() {
        let m = mixture_2d();
        let src = RewardSource::closed_form(linear_reward(2));
        for cfg in [
            DemonConfig { steps: 6, ode_steps: 3, k: 4, ..Default::default() },
            DemonConfig { steps: 6, t_switch: Some(1.0), k: 3, ..Default::default() },
            DemonConfig { steps: 5, ..DemonConfig::for_kind(DemonKind::None) },
        ] {
            let tr = sample_trajectory_at(&m, &cfg, &src, SeedPath::new(1)).unwrap();
            assert_eq!(planned_score_evals(&cfg).unwrap(), tr.score_evals);
        }
    }

    #[test]
    fn budget_search_is_tight() {
        let cfg = DemonConfig { ode_steps: 1, ..Default::default() };
        let budget = planned_score_evals(&DemonConfig { steps: 16, ..Default::default() }).unwrap();
        let t = steps_within(&cfg, budget).unwrap();
        assert!(planned_score_evals(&DemonConfig { steps: t, ..cfg.clone() }).unwrap() <= budget);
        assert!(planned_score_evals(&DemonConfig { steps: t + 1, ..cfg.clone() }).unwrap() > budget);
    }
}
