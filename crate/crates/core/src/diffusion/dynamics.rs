use super::{karras_schedule, DiffusionError, MixtureModel};
use crate::state::State;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Relative noise-reinjection rate `beta` of the reverse SDE; zero gives the PF-ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub beta: f64,
}

impl DynamicsParams {
    pub fn new(beta: f64) -> Result<Self, DiffusionError> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(DiffusionError::Config(format!("beta must be >= 0, got {beta}")));
        }
        Ok(DynamicsParams { beta })
    }

    pub fn ode() -> Self {
        DynamicsParams { beta: 0.0 }
    }
}

/// `f_beta(x, t) = -(t + beta t^2) grad log p(x, t)`.
pub fn drift(model: &MixtureModel, x: &[f64], t: f64, params: DynamicsParams) -> Result<Vec<f64>, DiffusionError> {
    let c = t + params.beta * t * t;
    let mut s = model.score(x, t)?;
    s.iter_mut().for_each(|v| *v *= -c);
    Ok(s)
}

/// `g_beta(t) = sqrt(2 beta) t`.
pub fn diffusion_coeff(t: f64, params: DynamicsParams) -> f64 {
    (2.0 * params.beta).sqrt() * t
}

/// One Heun step of the reverse SDE from `t` to `t - delta`, seeded by `z`.
///
/// The predictor is an Euler-Maruyama step; the corrector averages the drifts
/// and the diffusion coefficients at both ends and reuses the same `z`.
pub fn heun_sde_step(
    model: &MixtureModel,
    x: &[f64],
    z: &[f64],
    t: f64,
    delta: f64,
    params: DynamicsParams,
) -> Result<State, DiffusionError> {
    let t_next = t - delta;
    if !(delta > 0.0 && t_next > 0.0) {
        return Err(DiffusionError::Schedule(format!("step from t = {t} by delta = {delta} must stay in (0, t)")));
    }
    if z.len() != x.len() {
        return Err(DiffusionError::InvalidState("noise length differs from state length".into()));
    }
    let sq = delta.sqrt();
    let g0 = diffusion_coeff(t, params);
    let g1 = diffusion_coeff(t_next, params);
    let f0 = drift(model, x, t, params)?;
    let predictor: Vec<f64> = x.iter().zip(&f0).zip(z).map(|((xi, fi), zi)| xi - fi * delta + g0 * zi * sq).collect();
    let f1 = drift(model, &predictor, t_next, params)?;
    let g_avg = 0.5 * (g0 + g1);
    let out: Vec<f64> = x
        .iter()
        .zip(f0.iter().zip(&f1))
        .zip(z)
        .map(|((xi, (a, b)), zi)| xi - 0.5 * (a + b) * delta + g_avg * zi * sq)
        .collect();
    let out = State(out);
    if !out.is_finite() {
        return Err(DiffusionError::InvalidState("Heun step produced a non-finite state".into()));
    }
    Ok(out)
}

/// Number of Heun steps [`ode_map`] actually takes.
pub fn ode_steps_taken(t: f64, t_floor: f64, n_steps: usize) -> usize {
    if t > t_floor {
        n_steps
    } else {
        0
    }
}

/// The PF-ODE map `c(x, t)`: `n_steps` Heun ODE steps on a Karras sub-grid from
/// `t` down to `t_floor`. A state already at `t_floor` is returned unchanged.
pub fn ode_map(
    model: &MixtureModel,
    x: &[f64],
    t: f64,
    n_steps: usize,
    t_floor: f64,
    rho: f64,
) -> Result<State, DiffusionError> {
    if n_steps < 1 {
        return Err(DiffusionError::Config("ode_map needs at least one step".into()));
    }
    if t == t_floor {
        return Ok(State(x.to_vec()));
    }
    if !(t > t_floor && t_floor > 0.0) {
        return Err(DiffusionError::Schedule(format!(
            "ode_map needs t > t_floor > 0, got t = {t}, t_floor = {t_floor}"
        )));
    }
    let grid = karras_schedule(n_steps + 1, rho, t_floor, t)?;
    let zero = vec![0.0; x.len()];
    let mut cur = State(x.to_vec());
    for (ti, d) in grid.steps() {
        cur = heun_sde_step(model, &cur, &zero, ti, d, DynamicsParams::ode())?;
    }
    Ok(cur)
}

pub fn standard_normal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `x_{t_max} ~ N(0, t_max^2 I)`.
pub fn sample_prior<R: Rng + ?Sized>(dim: usize, t_max: f64, rng: &mut R) -> State {
    State((0..dim).map(|_| t_max * rng.sample::<f64, _>(StandardNormal)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::Component;
    use crate::rng::SeedPath;
    use approx::assert_relative_eq;

    fn sde(beta: f64) -> DynamicsParams {
        DynamicsParams::new(beta).unwrap()
    }

    /// Exact PF-ODE flow of N(mu, s^2 I): (x - mu) scales with sqrt(s^2 + t^2).
    fn gaussian_flow(mu: &[f64], s: f64, x: &[f64], t: f64, t_to: f64) -> Vec<f64> {
        let r = ((s * s + t_to * t_to) / (s * s + t * t)).sqrt();
        x.iter().zip(mu).map(|(xi, m)| m + (xi - m) * r).collect()
    }

    #[test]
    fn diffusion_coefficient_values() {
        assert_eq!(diffusion_coeff(3.0, sde(0.0)), 0.0);
        assert_relative_eq!(diffusion_coeff(2.0, sde(0.5)), 2.0, max_relative = 1e-15);
        assert_relative_eq!(diffusion_coeff(14.648, sde(0.1)), 0.2f64.sqrt() * 14.648, max_relative = 1e-15);
        assert!(DynamicsParams::new(-0.1).is_err());
    }

    #[test]
    fn drift_values() {
        let m = MixtureModel::point_mass(2);
        let x = [1.0, -3.0];
        let (t, beta) = (2.5, 0.3);
        let f = drift(&m, &x, t, sde(beta)).unwrap();
        for (fi, xi) in f.iter().zip(&x) {
            assert_relative_eq!(*fi, (1.0 + beta * t) * xi / t, max_relative = 1e-14);
        }
        let f0 = drift(&m, &x, t, DynamicsParams::ode()).unwrap();
        let s = m.score(&x, t).unwrap();
        for (fi, si) in f0.iter().zip(&s) {
            assert_relative_eq!(*fi, -t * si, max_relative = 1e-15);
        }
        // symmetric stationary point of a symmetric mixture
        let sym = MixtureModel::new(
            1,
            vec![
                Component { weight: 0.5, mean: vec![-1.0], scale: 0.2 },
                Component { weight: 0.5, mean: vec![1.0], scale: 0.2 },
            ],
        )
        .unwrap();
        assert_eq!(drift(&sym, &[0.0], 0.7, sde(0.1)).unwrap(), vec![0.0]);
    }

    #[test]
    fn ode_step_ignores_noise() {
        let m = MixtureModel::gaussian(vec![0.3, -0.2], 0.7);
        let x = [1.0, 2.0];
        let a = heun_sde_step(&m, &x, &[5.0, -5.0], 2.0, 0.3, DynamicsParams::ode()).unwrap();
        let b = heun_sde_step(&m, &x, &[0.0, 0.0], 2.0, 0.3, DynamicsParams::ode()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn point_mass_ode_step_matches_exact_flow() {
        let m = MixtureModel::point_mass(2);
        let x = [1.5, -0.5];
        for &(t, d) in &[(3.0, 1.0), (3.0, 0.5), (0.1, 0.05)] {
            let y = heun_sde_step(&m, &x, &[0.0; 2], t, d, DynamicsParams::ode()).unwrap();
            for (yi, xi) in y.iter().zip(&x) {
                assert_relative_eq!(*yi, xi * (t - d) / t, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn local_error_is_third_order() {
        let (mu, s) = (vec![0.5], 0.4);
        let m = MixtureModel::gaussian(mu.clone(), s);
        let x = [2.0];
        let t = 1.0;
        let err = |d: f64| {
            let y = heun_sde_step(&m, &x, &[0.0], t, d, DynamicsParams::ode()).unwrap();
            (y[0] - gaussian_flow(&mu, s, &x, t, t - d)[0]).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((7.0..9.0).contains(&ratio), "local error ratio {ratio}");
    }

    #[test]
    fn vanishing_step_is_continuous() {
        let m = MixtureModel::gaussian(vec![0.0, 1.0], 0.5);
        let x = [0.4, -0.3];
        let y = heun_sde_step(&m, &x, &[1.0, -1.0], 1.0, 1e-12, sde(0.1)).unwrap();
        for (yi, xi) in y.iter().zip(&x) {
            assert!((yi - xi).abs() < 1e-5);
        }
    }

    #[test]
    fn step_past_zero_is_rejected() {
        let m = MixtureModel::point_mass(1);
        assert!(matches!(heun_sde_step(&m, &[1.0], &[0.0], 1.0, 1.0, sde(0.1)), Err(DiffusionError::Schedule(_))));
    }

    #[test]
    fn global_heun_order_is_two() {
        let (mu, s) = (vec![0.5, -1.0], 0.5);
        let m = MixtureModel::gaussian(mu.clone(), s);
        let x = [3.0, 1.0];
        let (t0, t1) = (2.0, 0.5);
        let solve = |n: usize| {
            let grid = karras_schedule(n + 1, 1.0, t1, t0).unwrap();
            let mut cur = State(x.to_vec());
            for (t, d) in grid.steps() {
                cur = heun_sde_step(&m, &cur, &[0.0; 2], t, d, DynamicsParams::ode()).unwrap();
            }
            let exact = gaussian_flow(&mu, s, &x, t0, t1);
            cur.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let ratio = solve(16) / solve(32);
        assert!((3.5..=4.5).contains(&ratio), "global error ratio {ratio}");
    }

    #[test]
    fn ode_map_identity_at_floor() {
        let m = MixtureModel::gaussian(vec![0.0], 1.0);
        let y = ode_map(&m, &[1.25], 0.002, 20, 0.002, 7.0).unwrap();
        assert_eq!(y.0, vec![1.25]);
        assert!(ode_map(&m, &[1.25], 1.0, 0, 0.002, 7.0).is_err());
        assert!(ode_map(&m, &[1.25], 0.001, 4, 0.002, 7.0).is_err());
    }

    #[test]
    fn ode_map_matches_analytic_gaussian_flow() {
        let (mu, s) = (vec![1.0, -2.0], 1.0);
        let m = MixtureModel::gaussian(mu.clone(), s);
        let x = [3.0, 0.5];
        let spread = 2.5;
        for &t in &[0.5, 1.0, 5.0, 14.648] {
            let exact = gaussian_flow(&mu, s, &x, t, 0.002);
            let err = |n: usize| {
                let y = ode_map(&m, &x, t, n, 0.002, 7.0).unwrap();
                y.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            let (e20, e200) = (err(20), err(200));
            assert!(e20 < 5e-3 * spread, "t = {t}: 20-step error {e20}");
            assert!(e200 < 1e-4, "t = {t}: 200-step error {e200}");
            let ratio = e20 / e200;
            assert!((50.0..=150.0).contains(&ratio), "t = {t}: error ratio {ratio}");
        }
    }

    #[test]
    fn ode_map_self_convergence_on_mixture() {
        let m = MixtureModel::new(
            2,
            vec![
                Component { weight: 0.6, mean: vec![-1.5, 0.0], scale: 0.5 },
                Component { weight: 0.4, mean: vec![1.5, 1.0], scale: 0.4 },
            ],
        )
        .unwrap();
        let mut rng = SeedPath::new(3).rng();
        for &t in &[0.5, 2.0, 8.0] {
            let x = m.sample_marginal(t, &mut rng);
            let a = ode_map(&m, &x, t, 20, 0.002, 7.0).unwrap();
            let b = ode_map(&m, &x, t, 200, 0.002, 7.0).unwrap();
            let c = ode_map(&m, &x, t, 2000, 0.002, 7.0).unwrap();
            let sup = |p: &State, q: &State| p.iter().zip(q.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(sup(&a, &b) < 5e-3 * scale, "t = {t}: 20 vs 200 differ by {}", sup(&a, &b));
            assert!(sup(&b, &c) < 1e-3, "t = {t}: 200 vs 2000 differ by {}", sup(&b, &c));
            let again = ode_map(&m, &x, t, 20, 0.002, 7.0).unwrap();
            assert!(a.iter().zip(again.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn prior_is_reproducible_and_scaled() {
        let a = sample_prior(4, 14.648, &mut SeedPath::new(9).rng());
        let b = sample_prior(4, 14.648, &mut SeedPath::new(9).rng());
        assert_eq!(a, b);

        let t_max = 14.648;
        let n = 100_000;
        let mut rng = SeedPath::new(11).rng();
        let (mut s1, mut s2) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let x = sample_prior(2, t_max, &mut rng);
            for d in 0..2 {
                s1[d] += x[d];
                s2[d] += x[d] * x[d];
            }
        }
        for d in 0..2 {
            let mean = s1[d] / n as f64;
            let var = s2[d] / n as f64 - mean * mean;
            assert!(mean.abs() < 4.0 * t_max / (n as f64).sqrt(), "mean {mean}");
            assert!((var / (t_max * t_max) - 1.0).abs() < 0.05, "var {var}");
        }
    }
}
