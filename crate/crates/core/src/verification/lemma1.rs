use super::mc::{path_grid, sde_path, McEstimate, McSettings};
use super::report::{LemmaReport, Relation};
use crate::diffusion::{ode_map, DynamicsParams, MixtureModel};
use crate::rewards::{RewardError, RewardSpec};
use crate::rng::SeedPath;
use crate::state::{dot, State};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Settings {
    /// Paths and grid; `sde_steps` is also the step count of the ODE map `h`.
    pub mc: McSettings,
    pub grad_step: f64,
    pub lap_step: f64,
}

impl Default for Lemma1Settings {
    fn default() -> Self {
        Lemma1Settings { mc: McSettings::default(), grad_step: 1e-4, lap_step: 1e-3 }
    }
}

struct Estimator<'a> {
    model: &'a MixtureModel,
    spec: &'a RewardSpec,
    steps: usize,
    t_floor: f64,
    rho: f64,
}

impl Estimator<'_> {
    /// `h(y, u) = r(c(y, u))`.
    fn h(&self, y: &[f64], u: f64) -> Result<f64, RewardError> {
        let clean = ode_map(self.model, y, u, self.steps, self.t_floor, self.rho)?;
        self.spec.eval(&clean)
    }

    /// `beta u^2 (grad h . score, laplacian h)` by central differences.
    fn terms(&self, y: &State, u: f64, set: &Lemma1Settings) -> Result<(f64, f64), RewardError> {
        let n = y.len();
        let centre = self.h(y, u)?;
        let mut grad = vec![0.0; n];
        let mut lap = 0.0;
        let mut probe = y.0.clone();
        for d in 0..n {
            let (g, l) = (set.grad_step, set.lap_step);
            probe[d] = y[d] + g;
            let gp = self.h(&probe, u)?;
            probe[d] = y[d] - g;
            let gm = self.h(&probe, u)?;
            probe[d] = y[d] + l;
            let lp = self.h(&probe, u)?;
            probe[d] = y[d] - l;
            let lm = self.h(&probe, u)?;
            probe[d] = y[d];
            grad[d] = (gp - gm) / (2.0 * g);
            lap += (lp - 2.0 * centre + lm) / (l * l);
        }
        let score = self.model.score(y, u)?;
        Ok((dot(&grad, &score), lap))
    }
}

/// Checks `r_beta(x_t) - (r o c)(x_t) = E[int beta u^2 (grad h . grad log p + lap h) du]`
/// with `h = r o c`, along the same Monte-Carlo paths on both sides.
pub fn lemma1_residual(
    model: &MixtureModel,
    x: &[f64],
    t: f64,
    beta: f64,
    spec: &RewardSpec,
    set: &Lemma1Settings,
    root: SeedPath,
) -> Result<LemmaReport, RewardError> {
    if model.dim() > 3 {
        return Err(RewardError::Unsupported(format!(
            "finite-difference Laplacian is limited to dim <= 3, got {}",
            model.dim()
        )));
    }
    let mc = set.mc;
    if mc.samples < 2 {
        return Err(RewardError::InvalidSpec("need at least two paths".into()));
    }
    let est = Estimator { model, spec, steps: mc.sde_steps, t_floor: mc.t_floor, rho: mc.rho };
    let h0 = est.h(x, t)?;
    let grid = path_grid(t, &mc)?;
    let params = DynamicsParams::new(beta)?;
    let per_path: Vec<(f64, f64, f64, f64)> = (0..mc.samples)
        .into_par_iter()
        .map(|m| {
            let states = sde_path(model, x, &grid, params, root.child(m as u64))?;
            let lhs = spec.eval(states.last().expect("nonempty"))? - h0;
            if beta == 0.0 {
                return Ok((lhs, 0.0, 0.0, 0.0));
            }
            let mut drift_part = Vec::with_capacity(grid.len());
            let mut lap_part = Vec::with_capacity(grid.len());
            for (y, &u) in states.iter().zip(&grid) {
                let (a, b) = est.terms(y, u, set)?;
                drift_part.push(beta * u * u * a);
                lap_part.push(beta * u * u * b);
            }
            let trap = |v: &[f64]| -> f64 {
                grid.windows(2).zip(v.windows(2)).map(|(g, w)| 0.5 * (w[0] + w[1]) * (g[0] - g[1])).sum()
            };
            let (a, b) = (trap(&drift_part), trap(&lap_part));
            Ok((lhs, a + b, a, b))
        })
        .collect::<Result<_, RewardError>>()?;
    let lhs: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = per_path.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = per_path.iter().map(|p| p.0 - p.1).collect();
    let drift_terms: Vec<f64> = per_path.iter().map(|p| p.2).collect();
    let lap_terms: Vec<f64> = per_path.iter().map(|p| p.3).collect();
    let l = McEstimate::from_values(&lhs, mc.sde_steps);
    let r = McEstimate::from_values(&rhs, mc.sde_steps);
    let combined = (l.stderr.powi(2) + r.stderr.powi(2)).sqrt();
    let tolerance = 3.0 * combined;
    Ok(LemmaReport::new("lemma1", l.mean, r.mean, tolerance, Relation::Within)
        .with("t", t)
        .with("beta", beta)
        .with("state", x.to_vec())
        .with("reward", serde_json::to_value(spec).unwrap_or_default())
        .with("lhs_stderr", l.stderr)
        .with("rhs_stderr", r.stderr)
        .with("paired_stderr", McEstimate::from_values(&diff, mc.sde_steps).stderr)
        .with("drift_term", McEstimate::from_values(&drift_terms, mc.sde_steps).mean)
        .with("laplacian_term", McEstimate::from_values(&lap_terms, mc.sde_steps).mean)
        .with("r_o_c", h0)
        .with("paths", mc.samples)
        .with("sde_steps", mc.sde_steps)
        .with("grad_step", set.grad_step)
        .with("lap_step", set.lap_step))
}
