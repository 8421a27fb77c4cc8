use crate::diffusion::{heun_sde_step, karras_schedule, standard_normal, DiffusionError, DynamicsParams, MixtureModel};
use crate::rewards::{RewardError, RewardSpec};
use crate::rng::SeedPath;
use crate::state::{sample_std, stable_mean, State};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Monte-Carlo estimate of the expected final reward of SDE continuations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub sde_steps: usize,
}

impl McEstimate {
    pub fn from_values(values: &[f64], sde_steps: usize) -> Self {
        McEstimate {
            mean: stable_mean(values),
            stderr: sample_std(values) / (values.len() as f64).sqrt(),
            samples: values.len(),
            sde_steps,
        }
    }
}

/// Grid and dynamics shared by Monte-Carlo paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: usize,
    pub sde_steps: usize,
    pub t_floor: f64,
    pub rho: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings { samples: 1000, sde_steps: 20, t_floor: 0.002, rho: 7.0 }
    }
}

/// Time grid of a path from `t` to `t_floor`: `S + 1` Karras points, or just
/// `[t]` when `t` is already at the floor.
pub fn path_grid(t: f64, mc: &McSettings) -> Result<Vec<f64>, DiffusionError> {
    if t == mc.t_floor {
        return Ok(vec![t]);
    }
    Ok(karras_schedule(mc.sde_steps + 1, mc.rho, mc.t_floor, t)?.times)
}

/// One Heun SDE path along `grid`; returns every visited state.
pub fn sde_path(
    model: &MixtureModel,
    x: &[f64],
    grid: &[f64],
    params: DynamicsParams,
    stream: SeedPath,
) -> Result<Vec<State>, DiffusionError> {
    let mut rng = stream.rng();
    let mut states = Vec::with_capacity(grid.len());
    states.push(State(x.to_vec()));
    for w in grid.windows(2) {
        let z = standard_normal(x.len(), &mut rng);
        let next = heun_sde_step(model, states.last().expect("nonempty"), &z, w[0], w[0] - w[1], params)?;
        states.push(next);
    }
    Ok(states)
}

/// Final state of one path along `grid`.
pub fn sde_endpoint(
    model: &MixtureModel,
    x: &[f64],
    grid: &[f64],
    params: DynamicsParams,
    stream: SeedPath,
) -> Result<State, DiffusionError> {
    let mut rng = stream.rng();
    let mut cur = State(x.to_vec());
    for w in grid.windows(2) {
        let z = standard_normal(x.len(), &mut rng);
        cur = heun_sde_step(model, &cur, &z, w[0], w[0] - w[1], params)?;
    }
    Ok(cur)
}

/// Mean reward over `samples` paths along an explicit grid; path `m` uses
/// `root.child(m)`.
pub fn mc_on_grid(
    model: &MixtureModel,
    x: &[f64],
    grid: &[f64],
    beta: f64,
    spec: &RewardSpec,
    samples: usize,
    root: SeedPath,
) -> Result<McEstimate, RewardError> {
    if samples < 2 {
        return Err(RewardError::InvalidSpec("Monte-Carlo estimates need at least two samples".into()));
    }
    let params = DynamicsParams::new(beta)?;
    let values = (0..samples)
        .into_par_iter()
        .map(|m| {
            let end = sde_endpoint(model, x, grid, params, root.child(m as u64))?;
            spec.eval(&end)
        })
        .collect::<Result<Vec<f64>, RewardError>>()?;
    Ok(McEstimate::from_values(&values, grid.len().saturating_sub(1)))
}

/// `r_beta(x, t)`: mean of `r` over independent `S`-step Heun SDE paths from
/// `(x, t)` to `t_floor`.
pub fn mc_reward_estimate(
    model: &MixtureModel,
    x: &[f64],
    t: f64,
    beta: f64,
    spec: &RewardSpec,
    mc: &McSettings,
    root: SeedPath,
) -> Result<McEstimate, RewardError> {
    if mc.sde_steps < 2 {
        return Err(RewardError::InvalidSpec("Monte-Carlo paths need at least two steps".into()));
    }
    let grid = path_grid(t, mc)?;
    mc_on_grid(model, x, &grid, beta, spec, mc.samples, root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::ode_map;

    #[test]
    fn zero_beta_equals_the_ode_estimator() {
        let m = crate::benchmarks::mixture_2d();
        let spec = crate::benchmarks::quadratic_reward(2);
        let mc = McSettings { samples: 8, ..Default::default() };
        let x = [0.7, -1.1];
        let e = mc_reward_estimate(&m, &x, 1.5, 0.0, &spec, &mc, SeedPath::new(1)).unwrap();
        let direct = spec.eval(&ode_map(&m, &x, 1.5, mc.sde_steps, mc.t_floor, mc.rho).unwrap()).unwrap();
        assert_eq!(e.mean, direct);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn constant_reward_has_no_error() {
        let m = crate::benchmarks::mixture_2d();
        let spec = RewardSpec::Constant { value: 3.0 };
        let e = mc_reward_estimate(&m, &[0.0, 0.0], 2.0, 0.3, &spec, &McSettings::default(), SeedPath::new(2)).unwrap();
        assert_eq!((e.mean, e.stderr), (3.0, 0.0));
    }

    #[test]
    fn stderr_scales_with_sample_count() {
        let m = MixtureModel::gaussian(vec![0.5, 0.0], 0.7);
        let spec = RewardSpec::Linear { weights: vec![1.0, 1.0] };
        let run = |n| {
            let mc = McSettings { samples: n, ..Default::default() };
            mc_reward_estimate(&m, &[1.0, -1.0], 3.0, 0.2, &spec, &mc, SeedPath::new(3)).unwrap()
        };
        let (a, b) = (run(2000), run(8000));
        let ratio = a.stderr / b.stderr;
        assert!((ratio - 2.0).abs() < 0.5, "stderr ratio {ratio}");
        assert!((a.mean - b.mean).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
    }

    #[test]
    fn rejects_tiny_runs() {
        let m = MixtureModel::point_mass(1);
        let spec = RewardSpec::Constant { value: 0.0 };
        let mc = McSettings { samples: 1, ..Default::default() };
        assert!(mc_reward_estimate(&m, &[0.0], 1.0, 0.1, &spec, &mc, SeedPath::new(0)).is_err());
    }
}
