use super::DemonError;
use crate::state::{norm, State};

const DEGENERATE: f64 = 1e-12;

/// `sqrt(N) * v / |v|`.
pub fn sphere_project(v: &[f64]) -> Result<State, DemonError> {
    let n = norm(v);
    if !n.is_finite() || n <= DEGENERATE {
        return Err(DemonError::DegenerateCombination);
    }
    let scale = (v.len() as f64).sqrt() / n;
    Ok(State(v.iter().map(|x| x * scale).collect()))
}

/// `z* = sqrt(N) normalized(sum_k b_k z_k)`.
pub fn synthesize_noise(noises: &[State], weights: &[f64]) -> Result<State, DemonError> {
    if noises.is_empty() || noises.len() != weights.len() {
        return Err(DemonError::Config(format!("{} noises and {} weights", noises.len(), weights.len())));
    }
    let dim = noises[0].len();
    if noises.iter().any(|z| z.len() != dim) {
        return Err(DemonError::Config("noises differ in length".into()));
    }
    if weights.iter().any(|b| !b.is_finite()) {
        return Err(DemonError::NonFinite("weight".into()));
    }
    let mut acc = vec![0.0; dim];
    for (z, b) in noises.iter().zip(weights) {
        for (a, zi) in acc.iter_mut().zip(z.iter()) {
            *a += b * zi;
        }
    }
    sphere_project(&acc)
}

/// [`synthesize_noise`], falling back to the projected first noise when the
/// combination cancels out. The flag reports the fallback.
pub fn synthesize_or_fallback(noises: &[State], weights: &[f64]) -> Result<(State, bool), DemonError> {
    match synthesize_noise(noises, weights) {
        Ok(z) => Ok((z, false)),
        Err(DemonError::DegenerateCombination) => Ok((sphere_project(&noises[0])?, true)),
        Err(e) => Err(e),
    }
}
