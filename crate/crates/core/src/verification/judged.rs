use super::report::{LemmaReport, Relation};
use crate::demon::{sample_trajectory_at, DemonConfig, DemonError, DemonKind};
use crate::diffusion::{standard_normal, MixtureModel};
use crate::rewards::{partition_top, ComparatorSource, RewardError, RewardSource, SimulatedJudge};
use crate::rng::SeedPath;
use crate::state::{sample_std, stable_mean};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgedSettings {
    pub seeds: usize,
    pub k: usize,
    pub steps: usize,
    pub beta: f64,
    pub alpha: f64,
}

impl Default for JudgedSettings {
    fn default() -> Self {
        JudgedSettings { seeds: 50, k: 16, steps: 64, beta: 0.1, alpha: 0.05 }
    }
}

/// One-sided Welch test of `mean(a) > mean(b)`; returns `(t, p)`.
pub fn welch_one_sided(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_std(a).powi(2) / na, sample_std(b).powi(2) / nb);
    let se = (va + vb).sqrt();
    let t = (stable_mean(a) - stable_mean(b)) / se;
    if !t.is_finite() {
        return (t, if t > 0.0 { 0.0 } else { 1.0 });
    }
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let p = StudentsT::new(0.0, 1.0, df).map(|d| d.sf(t)).unwrap_or(f64::NAN);
    (t, p)
}

/// Comparison-driven Tanh (partition labels from the judge) against plain
/// sampling, both scored by the judge's hidden reward. Seed `s` of both arms
/// uses `root.child(s)`.
pub fn comparison_pipeline_check(
    model: &MixtureModel,
    judge: &SimulatedJudge,
    set: &JudgedSettings,
    root: SeedPath,
) -> Result<LemmaReport, DemonError> {
    let source = RewardSource::Comparison { comparator: ComparatorSource::Judge { judge: judge.clone() } };
    let guided = DemonConfig { k: set.k, steps: set.steps, beta: set.beta, ..DemonConfig::for_kind(DemonKind::Tanh) };
    let plain = DemonConfig { steps: set.steps, beta: set.beta, ..DemonConfig::for_kind(DemonKind::None) };
    let mut scores = [Vec::new(), Vec::new()];
    let mut comparisons = 0;
    for s in 0..set.seeds {
        for (arm, cfg) in [&guided, &plain].into_iter().enumerate() {
            let tr = sample_trajectory_at(model, cfg, &source, root.child(s as u64))?;
            comparisons += tr.reward_queries;
            scores[arm].push(judge.score(&tr.final_state)?);
        }
    }
    let (t, p) = welch_one_sided(&scores[0], &scores[1]);
    Ok(LemmaReport::new("comparison_pipeline", p, set.alpha, 0.0, Relation::AtMost)
        .require("p_below_alpha", p < set.alpha)
        .with("guided_mean", stable_mean(&scores[0]))
        .with("plain_mean", stable_mean(&scores[1]))
        .with("welch_t", t)
        .with("comparisons", comparisons)
        .with("flip_prob", judge.flip_prob))
}

/// Comparison count bound and true-max containment of `partition_top` under
/// a perfect comparator over random `K` in `[2, max_k]`.
pub fn partition_check(trials: usize, max_k: usize, root: SeedPath) -> Result<LemmaReport, RewardError> {
    let mut over_budget = 0usize;
    let mut missed_max = 0usize;
    let mut most = 0usize;
    for i in 0..trials {
        let stream = root.child(i as u64);
        let mut rng = stream.child(0).rng();
        let k = rng.random_range(2..=max_k);
        let values = standard_normal(k, &mut rng);
        let mut cmp = |a: usize, b: usize| Ok::<bool, RewardError>(values[a] > values[b]);
        let out = partition_top(k, &mut cmp, &mut stream.child(1).rng())?;
        let used = out.comparisons.len();
        most = most.max(used);
        if used > 2 * (k - 1) {
            over_budget += 1;
        }
        let argmax = (0..k).max_by(|&a, &b| values[a].total_cmp(&values[b])).expect("k >= 2");
        if !out.plus.contains(&argmax) {
            missed_max += 1;
        }
    }
    Ok(LemmaReport::new("partition_top", (over_budget + missed_max) as f64, 0.0, 0.0, Relation::Within)
        .with("trials", trials)
        .with("over_budget", over_budget)
        .with("missed_max", missed_max)
        .with("most_comparisons", most))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_reference() {
        // scipy.stats.ttest_ind(a, b, equal_var=False, alternative="greater")
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0, 0.5, 1.0, 1.5, 7.0];
        let (t, p) = welch_one_sided(&a, &b);
        assert!((t - 0.685_994_340_6).abs() < 1e-9, "{t}");
        assert!((p - 0.258_674_240_2).abs() < 1e-8, "{p}");
    }
}
