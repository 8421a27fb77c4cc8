use super::mc::{mc_reward_estimate, McSettings};
use super::report::LemmaReport;
use crate::diffusion::{ode_map, sample_prior, MixtureModel};
use crate::rewards::{RewardError, RewardSpec};
use crate::rng::SeedPath;
use crate::state::sample_std;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadSettings {
    pub t_values: Vec<f64>,
    /// ODE step counts of the compared estimators.
    pub estimators: Vec<usize>,
    pub states: usize,
    pub beta: f64,
    pub mc: McSettings,
    /// Heun steps used to carry prior draws from `t_max` down to each `t`.
    pub push_steps: usize,
    pub t_max: f64,
    pub record_wall_time: bool,
}

impl Default for SpreadSettings {
    fn default() -> Self {
        SpreadSettings {
            t_values: vec![0.5, 1.0, 3.0, 7.0, 14.0],
            estimators: vec![1, 4, 20],
            states: 200,
            beta: 0.1,
            mc: McSettings { samples: 256, sde_steps: 40, ..Default::default() },
            push_steps: 200,
            t_max: 14.648,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub t: f64,
    pub ode_steps: usize,
    /// Standard deviation of `r_beta - r o c` over states.
    pub std: f64,
    pub mean_gap: f64,
    /// Score evaluations per estimator call.
    pub score_evals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_us_per_call: Option<f64>,
}

/// Spread of `r_beta - r o c` for each estimator and time, over states drawn
/// from the prior and carried to `t` by the probability-flow ODE. The
/// Monte-Carlo reference is shared by all estimators at a given state.
pub fn estimator_spread_table(
    model: &MixtureModel,
    spec: &RewardSpec,
    set: &SpreadSettings,
    root: SeedPath,
) -> Result<Vec<SpreadRow>, RewardError> {
    let mut rows = Vec::new();
    for (ti, &t) in set.t_values.iter().enumerate() {
        if !(t > set.mc.t_floor && t <= set.t_max) {
            return Err(RewardError::InvalidSpec(format!("t = {t} outside (t_floor, t_max]")));
        }
        let stream = root.child(ti as u64);
        let states = (0..set.states)
            .into_par_iter()
            .map(|i| {
                let x = sample_prior(model.dim(), set.t_max, &mut stream.child(0).child(i as u64).rng());
                if t == set.t_max {
                    Ok(x)
                } else {
                    ode_map(model, &x, set.t_max, set.push_steps, t, set.mc.rho)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let reference = states
            .iter()
            .enumerate()
            .map(|(i, x)| {
                Ok(mc_reward_estimate(model, x, t, set.beta, spec, &set.mc, stream.child(1).child(i as u64))?.mean)
            })
            .collect::<Result<Vec<f64>, RewardError>>()?;
        for &n in &set.estimators {
            let start = Instant::now();
            let est = states
                .iter()
                .map(|x| spec.eval(&ode_map(model, x, t, n, set.mc.t_floor, set.mc.rho)?))
                .collect::<Result<Vec<f64>, RewardError>>()?;
            let elapsed = start.elapsed().as_secs_f64();
            let gaps: Vec<f64> = reference.iter().zip(&est).map(|(r, e)| r - e).collect();
            rows.push(SpreadRow {
                t,
                ode_steps: n,
                std: sample_std(&gaps),
                mean_gap: crate::state::stable_mean(&gaps),
                score_evals: 2 * n,
                wall_us_per_call: set.record_wall_time.then(|| 1e6 * elapsed / set.states as f64),
            });
        }
    }
    Ok(rows)
}

/// Checks the two orderings: std non-increasing in ODE steps at every `t`,
/// and non-decreasing in `t` for the most accurate estimator.
pub fn spread_report(rows: &[SpreadRow]) -> LemmaReport {
    let mut ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    ts.dedup();
    let mut by_steps_ok = true;
    let mut violations = Vec::new();
    for &t in &ts {
        let mut at: Vec<&SpreadRow> = rows.iter().filter(|r| r.t == t).collect();
        at.sort_by_key(|r| r.ode_steps);
        for w in at.windows(2) {
            if w[1].std > w[0].std {
                by_steps_ok = false;
                violations.push(format!("t = {t}: {} steps above {} steps", w[1].ode_steps, w[0].ode_steps));
            }
        }
    }
    let best = rows.iter().map(|r| r.ode_steps).max().unwrap_or(0);
    let mut accurate: Vec<&SpreadRow> = rows.iter().filter(|r| r.ode_steps == best).collect();
    accurate.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut by_t_ok = true;
    for w in accurate.windows(2) {
        if w[1].std < w[0].std {
            by_t_ok = false;
            violations.push(format!("{best} steps: t = {} below t = {}", w[1].t, w[0].t));
        }
    }
    LemmaReport::flag("spread", by_steps_ok && by_t_ok)
        .with("non_increasing_in_steps", by_steps_ok)
        .with("non_decreasing_in_t", by_t_ok)
        .with("violations", violations)
        .with("table", serde_json::to_value(rows).unwrap_or_default())
}
