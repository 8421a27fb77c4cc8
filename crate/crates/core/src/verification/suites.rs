use super::*;
use crate::benchmarks::{bump_reward, linear_reward, mixture_2d, mixture_8d, neg_distance_reward, quadratic_reward};
use crate::demon::{DemonConfig, DemonError};
use crate::diffusion::{ode_map, MixtureModel};
use crate::rewards::{RewardError, RewardSource, RewardSpec, SimulatedJudge};
use crate::rng::SeedPath;
use crate::state::State;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma1,
    Martingale,
    Lemma3,
    Lemma4,
    Lemma5,
    Spread,
    Curves,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] =
        ["lemma1", "martingale", "lemma3", "lemma4", "lemma5", "spread", "curves", "all"];
    const EACH: [Suite; 7] =
        [Suite::Lemma1, Suite::Martingale, Suite::Lemma3, Suite::Lemma4, Suite::Lemma5, Suite::Spread, Suite::Curves];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Martingale => "martingale",
            Suite::Lemma3 => "lemma3",
            Suite::Lemma4 => "lemma4",
            Suite::Lemma5 => "lemma5",
            Suite::Spread => "spread",
            Suite::Curves => "curves",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}', expected one of {}", Suite::NAMES.join(", ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Small sample sizes for smoke runs; reports may not reach their bounds.
    pub quick: bool,
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteOutput {
    pub reports: Vec<LemmaReport>,
    /// Named tables (spread rows, curve points).
    pub tables: serde_json::Map<String, serde_json::Value>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Runs one suite, or all of them; every suite draws from its own child of
/// the seed.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteOutput, DemonError> {
    let mut out = SuiteOutput::default();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let root = SeedPath::new(opts.seed);
    for s in suites {
        let stream = root.child(s as u64);
        match s {
            Suite::Lemma1 => out.reports.extend(lemma1_suite(opts, stream)?),
            Suite::Martingale => out.reports.extend(nested_suite(false, opts, stream)?),
            Suite::Lemma3 => out.reports.extend(nested_suite(true, opts, stream)?),
            Suite::Lemma4 => out.reports.extend(lemma4_suite(opts, stream)?),
            Suite::Lemma5 => out.reports.extend(lemma5_suite(opts, stream)),
            Suite::Spread => {
                let (report, rows) = spread_suite(opts, stream)?;
                out.reports.push(report);
                out.tables.insert("spread".into(), rows);
            }
            Suite::Curves => {
                let (reports, points) = curves_suite(opts, stream)?;
                out.reports.extend(reports);
                out.tables.insert("curves".into(), points);
            }
            Suite::All => unreachable!("expanded above"),
        }
    }
    if suite == Suite::All {
        let trials = if opts.quick { 500 } else { 10_000 };
        out.reports.push(tanh_mechanism_check(trials, 64, 64, root.child(100))?);
    }
    Ok(out)
}

/// Identity checks for the reward estimate on the 2-D benchmark: linear, quadratic and bump
/// rewards at three noise levels, the deterministic case, and the sign of a
/// bump centred at `c(x_t)`.
pub fn lemma1_suite(opts: &SuiteOptions, root: SeedPath) -> Result<Vec<LemmaReport>, RewardError> {
    let m = mixture_2d();
    let samples = if opts.quick { 64 } else { 1000 };
    let set = Lemma1Settings { mc: McSettings { samples, ..Default::default() }, ..Default::default() };
    let t = 2.0;
    let x = m.sample_marginal(t, &mut root.child(0).rng());
    let mut reports = Vec::new();
    let specs = [("linear", linear_reward(2)), ("quadratic", quadratic_reward(2)), ("bump", bump_reward(2))];
    for (i, (name, spec)) in specs.iter().enumerate() {
        for (j, beta) in [0.05, 0.1, 0.2].into_iter().enumerate() {
            let mut r = lemma1_residual(&m, &x, t, beta, spec, &set, root.child(1).child((3 * i + j) as u64))?;
            r.id = format!("lemma1_{name}_beta{beta}");
            reports.push(r.with("reward", *name));
        }
    }
    let exact = lemma1_residual(&m, &x, t, 0.0, &linear_reward(2), &set, root.child(2))?;
    reports.push(
        LemmaReport::new("lemma1_beta0", exact.lhs, exact.rhs, 0.0, Relation::Within)
            .require("both_sides_zero", exact.lhs == 0.0 && exact.rhs == 0.0),
    );
    let t_sign = 0.5;
    let xs = m.sample_marginal(t_sign, &mut root.child(3).rng());
    let centre = ode_map(&m, &xs, t_sign, set.mc.sde_steps, set.mc.t_floor, set.mc.rho)?;
    let peak = RewardSpec::GaussianBump { center: centre.0, width: 0.2 };
    let sign = lemma1_residual(&m, &xs, t_sign, 0.1, &peak, &set, root.child(4))?;
    reports.push(
        LemmaReport::new("lemma1_bump_sign", sign.lhs, 0.0, 0.0, Relation::AtMost)
            .require("strictly_negative", sign.lhs < 0.0)
            .with("t", t_sign)
            .with("paired_stderr", sign.diagnostics.get("paired_stderr").cloned().unwrap_or_default()),
    );
    Ok(reports)
}

/// Random points `(x, t)` with `t` and `delta` taken from the default grid
/// and `x` drawn from the marginal at `t`.
fn random_points(model: &MixtureModel, count: usize, root: SeedPath) -> Result<Vec<(State, f64, f64)>, DemonError> {
    let schedule = DemonConfig::default().schedule()?;
    let mut rng = root.rng();
    Ok((0..count)
        .map(|_| {
            let i = rng.random_range(0..schedule.len() - 1);
            let t = schedule.times[i];
            (model.sample_marginal(t, &mut rng), t, schedule.delta(i))
        })
        .collect())
}

/// Martingale (`lemma3 = false`) or one-step improvement checks on random
/// points of the 2-D benchmark with the linear reward.
pub fn nested_suite(lemma3: bool, opts: &SuiteOptions, root: SeedPath) -> Result<Vec<LemmaReport>, DemonError> {
    let m = mixture_2d();
    let spec = linear_reward(2);
    let beta = 0.1;
    let count = if opts.quick { 2 } else { 20 };
    let nested = if opts.quick {
        NestedSettings { outer: 16, inner: 8, direct: 64, ..Default::default() }
    } else {
        NestedSettings::default()
    };
    let mut reports = Vec::new();
    for (i, (x, t, delta)) in random_points(&m, count, root.child(0))?.into_iter().enumerate() {
        let stream = root.child(1).child(i as u64);
        let mut r = if lemma3 {
            let set = Lemma3Settings { trials: if opts.quick { 4 } else { 64 }, k: 16, nested };
            lemma3_check(&m, &x, t, delta, beta, &spec, &set, stream)?
        } else {
            martingale_check(&m, &x, t, delta, beta, &spec, &nested, stream)?
        };
        r.id = format!("{}_{i}", r.id);
        reports.push(r);
    }
    Ok(reports)
}

pub fn lemma4_suite(opts: &SuiteOptions, root: SeedPath) -> Result<Vec<LemmaReport>, DemonError> {
    let set = if opts.quick {
        Lemma4Settings { samples: 500, steps: 16, k: 4, ode_steps: 2, permutations: 49, ..Default::default() }
    } else {
        Lemma4Settings::default()
    };
    lemma4_check(&mixture_8d(), &RewardSource::closed_form(linear_reward(8)), &set, root)
}

/// Chi concentration at the default band and at the absolute band of 4.
pub fn lemma5_suite(opts: &SuiteOptions, root: SeedPath) -> Vec<LemmaReport> {
    let (dim, draws) = if opts.quick { (1000, 1000) } else { (10_000, 10_000) };
    let mut wide = sphere_concentration(dim, draws, 4.0, root);
    wide.id = "lemma5_band4".into();
    vec![sphere_concentration(dim, draws, default_band(), root), wide]
}

pub fn spread_suite(opts: &SuiteOptions, root: SeedPath) -> Result<(LemmaReport, serde_json::Value), RewardError> {
    let mut set = SpreadSettings { record_wall_time: opts.record_wall_time, ..Default::default() };
    if opts.quick {
        set.states = 20;
        set.mc.samples = 32;
    }
    let rows = estimator_spread_table(&mixture_2d(), &linear_reward(2), &set, root)?;
    Ok((spread_report(&rows), serde_json::to_value(&rows).unwrap_or_default()))
}

/// Improvement curves, the partition bounds, and the comparison pipeline.
pub fn curves_suite(opts: &SuiteOptions, root: SeedPath) -> Result<(Vec<LemmaReport>, serde_json::Value), DemonError> {
    let m = mixture_2d();
    let mut set = CurveSettings { record_wall_time: opts.record_wall_time, ..Default::default() };
    let mut judged = JudgedSettings::default();
    if opts.quick {
        set.seeds = 4;
        set.steps = 8;
        set.query_budgets = vec![4, 8];
        set.cost_budgets = vec![8];
        judged.seeds = 4;
        judged.steps = 8;
    }
    let results = improvement_curves(&m, &RewardSource::closed_form(linear_reward(2)), &set, root.child(0))?;
    let mut reports = results.reports;
    reports.push(partition_check(if opts.quick { 500 } else { 10_000 }, 64, root.child(1))?);
    let judge = SimulatedJudge::new(neg_distance_reward(2), 0.1)?;
    reports.push(comparison_pipeline_check(&m, &judge, &judged, root.child(2))?);
    Ok((reports, serde_json::to_value(&results.points).unwrap_or_default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().name(), n);
        }
        assert!("lemma9".parse::<Suite>().is_err());
    }
}
