use super::equivalence::distribution_equivalence;
use super::mc::sde_endpoint;
use super::report::LemmaReport;
use crate::demon::{sample_trajectory_at, DemonConfig, DemonError, DemonKind, Temperature};
use crate::diffusion::{sample_prior, MixtureModel};
use crate::rewards::RewardSource;
use crate::rng::{domain, SeedPath};
use crate::state::State;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Settings {
    pub samples: usize,
    pub steps: usize,
    pub k: usize,
    pub beta: f64,
    pub ode_steps: usize,
    pub permutations: usize,
    /// Also compare against plain sampling with unprojected Gaussian noise.
    pub raw_gaussian: bool,
}

impl Default for Lemma4Settings {
    fn default() -> Self {
        Lemma4Settings {
            samples: 2000,
            steps: 128,
            k: 16,
            beta: 0.1,
            ode_steps: 20,
            permutations: 199,
            raw_gaussian: true,
        }
    }
}

fn ensemble(
    model: &MixtureModel,
    cfg: &DemonConfig,
    source: &RewardSource,
    samples: usize,
    root: SeedPath,
) -> Result<Vec<State>, DemonError> {
    (0..samples)
        .into_par_iter()
        .map(|i| Ok(sample_trajectory_at(model, cfg, source, root.child(i as u64))?.final_state))
        .collect()
}

/// Final-state ensembles of Boltzmann at infinite temperature against plain
/// sampling, plus the Tanh positive control, which must be distinguishable.
/// Each arm draws its samples from its own child of `root`.
pub fn lemma4_check(
    model: &MixtureModel,
    source: &RewardSource,
    set: &Lemma4Settings,
    root: SeedPath,
) -> Result<Vec<LemmaReport>, DemonError> {
    let base =
        DemonConfig { k: set.k, steps: set.steps, beta: set.beta, ode_steps: set.ode_steps, ..Default::default() };
    let plain_cfg = DemonConfig { kind: DemonKind::None, k: 1, ..base.clone() };
    let boltz_cfg = DemonConfig { kind: DemonKind::Boltzmann, tau: Some(Temperature::Infinite), ..base.clone() };
    let tanh_cfg = DemonConfig { kind: DemonKind::Tanh, ..base.clone() };

    let plain = ensemble(model, &plain_cfg, source, set.samples, root.child(0))?;
    let boltz = ensemble(model, &boltz_cfg, source, set.samples, root.child(1))?;
    let tanh = ensemble(model, &tanh_cfg, source, set.samples, root.child(2))?;
    let equivalence = |a: &[State], b: &[State], stream: u64| {
        distribution_equivalence(a, b, set.permutations, root.child(3).child(stream)).map_err(DemonError::Config)
    };

    let mut reports = Vec::new();
    let mut main = equivalence(&boltz, &plain, 0)?;
    main.id = "lemma4".into();
    reports.push(main.with("dim", model.dim()).with("steps", set.steps).with("k", set.k));

    let control = equivalence(&tanh, &plain, 1)?;
    reports.push(
        LemmaReport::new("lemma4_control", control.lhs, 0.01, 0.0, super::Relation::AtMost)
            .with("note", "passes when the Tanh ensemble is distinguishable from plain sampling")
            .with("equivalence", serde_json::to_value(&control).unwrap_or_default()),
    );

    if set.raw_gaussian {
        let schedule = plain_cfg.schedule()?;
        let params = plain_cfg.dynamics();
        let raw: Vec<State> = (0..set.samples)
            .into_par_iter()
            .map(|i| {
                let stream = root.child(4).child(i as u64);
                let x0 = sample_prior(model.dim(), plain_cfg.t_max, &mut stream.child(domain::PRIOR).rng());
                Ok(sde_endpoint(model, &x0, &schedule.times, params, stream.child(domain::STEP))?)
            })
            .collect::<Result<_, DemonError>>()?;
        let mut diag = equivalence(&boltz, &raw, 2)?;
        diag.id = "lemma4_raw_gaussian".into();
        reports.push(diag.with("gating", false));
    }
    Ok(reports)
}
