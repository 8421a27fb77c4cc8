use super::report::{LemmaReport, Relation};
use crate::demon::{synthesize_noise, tanh_weights, tanh_weights_about, DemonError, Temperature};
use crate::diffusion::standard_normal;
use crate::rng::SeedPath;
use crate::state::{dot, State};
use rand::Rng;

/// Positivity of `l . z*` for a linear surrogate reward with estimates
/// `l . z_k`, weights centred at the surrogate value of the current state
/// (zero), over random `N` in `[1, max_dim]` and `K` in `[2, max_k]`. The
/// mean-centred failure count is reported as a diagnostic.
pub fn tanh_mechanism_check(
    trials: usize,
    max_dim: usize,
    max_k: usize,
    root: SeedPath,
) -> Result<LemmaReport, DemonError> {
    let mut positive = 0usize;
    let mut mean_centred_failures = 0usize;
    for i in 0..trials {
        let mut rng = root.child(i as u64).rng();
        let n = rng.random_range(1..=max_dim);
        let k = rng.random_range(2..=max_k.max(2));
        let l = standard_normal(n, &mut rng);
        let noises: Vec<State> = (0..k).map(|_| State(standard_normal(n, &mut rng))).collect();
        let estimates: Vec<f64> = noises.iter().map(|z| dot(&l, z)).collect();
        let w = tanh_weights_about(&estimates, 0.0, Temperature::Adaptive)?;
        if dot(&l, &synthesize_noise(&noises, &w.weights)?) > 0.0 {
            positive += 1;
        }
        let wm = tanh_weights(&estimates, Temperature::Adaptive)?;
        match synthesize_noise(&noises, &wm.weights) {
            Ok(z) if dot(&l, &z) > 0.0 => {}
            _ => mean_centred_failures += 1,
        }
    }
    Ok(LemmaReport::new("tanh_mechanism", positive as f64, trials as f64, 0.0, Relation::Within)
        .with("trials", trials)
        .with("mean_centred_failures", mean_centred_failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_exact() {
        let r = tanh_mechanism_check(500, 16, 16, SeedPath::new(4)).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
