use super::mc::{mc_on_grid, path_grid, McEstimate, McSettings};
use super::report::{LemmaReport, Relation};
use crate::diffusion::{heun_sde_step, standard_normal, DynamicsParams, MixtureModel};
use crate::rewards::{RewardError, RewardSpec};
use crate::rng::SeedPath;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedSettings {
    /// One-step-descended states.
    pub outer: usize,
    /// Paths per descended state.
    pub inner: usize,
    /// Paths for the estimate at the starting state.
    pub direct: usize,
    /// Grid from `t - delta` down to `t_floor`.
    pub inner_steps: usize,
    pub t_floor: f64,
    pub rho: f64,
}

impl Default for NestedSettings {
    fn default() -> Self {
        NestedSettings { outer: 256, inner: 64, direct: 4096, inner_steps: 20, t_floor: 0.002, rho: 7.0 }
    }
}

impl NestedSettings {
    fn inner_grid(&self, t_next: f64) -> Result<Vec<f64>, RewardError> {
        let mc = McSettings { samples: self.inner, sde_steps: self.inner_steps, t_floor: self.t_floor, rho: self.rho };
        Ok(path_grid(t_next, &mc)?)
    }

    /// `[t]` followed by the inner grid from `t - delta`.
    pub(crate) fn chain(&self, t: f64, delta: f64) -> Result<(Vec<f64>, Vec<f64>), RewardError> {
        let inner = self.inner_grid(t - delta)?;
        let mut full = vec![t];
        full.extend_from_slice(&inner);
        Ok((full, inner))
    }
}

/// Reward estimate of `n` one-step descendants of `x`, each estimated with
/// `set.inner` paths; returns one mean per descendant.
#[allow(clippy::too_many_arguments)]
pub(crate) fn descendant_means(
    model: &MixtureModel,
    x: &[f64],
    t: f64,
    delta: f64,
    beta: f64,
    spec: &RewardSpec,
    set: &NestedSettings,
    inner_grid: &[f64],
    n: usize,
    root: SeedPath,
) -> Result<Vec<f64>, RewardError> {
    let params = DynamicsParams::new(beta)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let stream = root.child(i as u64);
            let z = standard_normal(x.len(), &mut stream.child(0).rng());
            let next = heun_sde_step(model, x, &z, t, delta, params)?;
            Ok(mc_on_grid(model, &next, inner_grid, beta, spec, set.inner, stream.child(1))?.mean)
        })
        .collect()
}

/// Compares the estimate at `(x, t)` with the mean estimate over one-step
/// descendants at `t - delta`. Both sides follow the same discrete chain.
#[allow(clippy::too_many_arguments)]
pub fn martingale_check(
    model: &MixtureModel,
    x: &[f64],
    t: f64,
    delta: f64,
    beta: f64,
    spec: &RewardSpec,
    set: &NestedSettings,
    root: SeedPath,
) -> Result<LemmaReport, RewardError> {
    if !(delta > 0.0 && t - delta >= set.t_floor) {
        return Err(RewardError::InvalidSpec(format!(
            "need t > delta and t - delta >= t_floor, got t = {t}, delta = {delta}"
        )));
    }
    let (chain, inner) = set.chain(t, delta)?;
    let direct = mc_on_grid(model, x, &chain, beta, spec, set.direct, root.child(0))?;
    let means = descendant_means(model, x, t, delta, beta, spec, set, &inner, set.outer, root.child(1))?;
    let nested = McEstimate::from_values(&means, inner.len().saturating_sub(1));
    let combined = (direct.stderr.powi(2) + nested.stderr.powi(2)).sqrt();
    Ok(LemmaReport::new("martingale", direct.mean, nested.mean, 3.0 * combined, Relation::Within)
        .with("t", t)
        .with("delta", delta)
        .with("beta", beta)
        .with("state", x.to_vec())
        .with("direct_stderr", direct.stderr)
        .with("nested_stderr", nested.stderr)
        .with("outer", set.outer)
        .with("inner", set.inner)
        .with("direct_paths", set.direct))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_reward_is_exact() {
        let m = crate::benchmarks::mixture_2d();
        let set = NestedSettings { outer: 8, inner: 4, direct: 16, ..Default::default() };
        let r = martingale_check(
            &m,
            &[0.1, 0.2],
            2.0,
            0.3,
            0.1,
            &RewardSpec::Constant { value: 3.0 },
            &set,
            SeedPath::new(1),
        )
        .unwrap();
        assert_eq!((r.lhs, r.rhs), (3.0, 3.0));
        assert!(r.pass);
    }

    #[test]
    fn zero_beta_sides_agree() {
        let m = crate::benchmarks::mixture_2d();
        let set = NestedSettings { outer: 4, inner: 2, direct: 4, ..Default::default() };
        let spec = crate::benchmarks::linear_reward(2);
        let r = martingale_check(&m, &[0.1, 0.2], 2.0, 0.3, 0.0, &spec, &set, SeedPath::new(1)).unwrap();
        assert_eq!(r.lhs, r.rhs);
    }
}
