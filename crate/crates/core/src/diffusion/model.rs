use super::DiffusionError;
use crate::state::{sq_dist, State};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One isotropic Gaussian component of the data distribution. A zero scale is a
/// point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub scale: f64,
}

/// Isotropic Gaussian mixture used as `p_data`. Its noised marginal at time `t`
/// is again a mixture with per-component variance `scale^2 + t^2`, so the score
/// is available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct MixtureModel {
    dim: usize,
    components: Vec<Component>,
}

#[derive(Deserialize)]
struct RawModel {
    dim: usize,
    components: Vec<Component>,
}

impl TryFrom<RawModel> for MixtureModel {
    type Error = DiffusionError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        MixtureModel::new(raw.dim, raw.components)
    }
}

impl MixtureModel {
    pub fn new(dim: usize, components: Vec<Component>) -> Result<Self, DiffusionError> {
        if dim == 0 {
            return Err(DiffusionError::InvalidModel("dim must be positive".into()));
        }
        if components.is_empty() {
            return Err(DiffusionError::InvalidModel("at least one component is required".into()));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(DiffusionError::InvalidModel(format!("component {i}: weight {} outside (0, 1]", c.weight)));
            }
            if !(c.scale >= 0.0 && c.scale.is_finite()) {
                return Err(DiffusionError::InvalidModel(format!(
                    "component {i}: scale {} must be finite and non-negative",
                    c.scale
                )));
            }
            if c.mean.len() != dim {
                return Err(DiffusionError::InvalidModel(format!(
                    "component {i}: mean has length {}, expected {dim}",
                    c.mean.len()
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(DiffusionError::InvalidModel(format!("component {i}: non-finite mean")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(DiffusionError::InvalidModel(format!("weights sum to {total}, expected 1")));
        }
        Ok(MixtureModel { dim, components })
    }

    /// Point mass at the origin; its score is exactly `-x / t^2`.
    pub fn point_mass(dim: usize) -> Self {
        MixtureModel::gaussian(vec![0.0; dim], 0.0)
    }

    pub fn gaussian(mean: Vec<f64>, scale: f64) -> Self {
        let dim = mean.len();
        MixtureModel::new(dim, vec![Component { weight: 1.0, mean, scale }]).expect("single-component model is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Log responsibilities (unnormalized) and the log-sum-exp normalizer.
    fn log_terms(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, f64), DiffusionError> {
        self.check_input(x, t)?;
        let n = self.dim as f64;
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let v = c.scale * c.scale + t * t;
                c.weight.ln() - sq_dist(x, &c.mean) / (2.0 * v) - 0.5 * n * (2.0 * std::f64::consts::PI * v).ln()
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(DiffusionError::DensityUnderflow { t });
        }
        let lse = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Ok((logs, lse))
    }

    fn check_input(&self, x: &[f64], t: f64) -> Result<(), DiffusionError> {
        if x.len() != self.dim {
            return Err(DiffusionError::InvalidState(format!(
                "length {} does not match model dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::InvalidState("non-finite coordinate".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(DiffusionError::InvalidState(format!("time {t} must be positive")));
        }
        Ok(())
    }

    /// `log p(x, t)` of the noised marginal.
    pub fn log_density(&self, x: &[f64], t: f64) -> Result<f64, DiffusionError> {
        self.log_terms(x, t).map(|(_, lse)| lse)
    }

    /// `grad_x log p(x, t) = sum_i gamma_i (mu_i - x) / (sigma_i^2 + t^2)`.
    pub fn score(&self, x: &[f64], t: f64) -> Result<Vec<f64>, DiffusionError> {
        let (logs, lse) = self.log_terms(x, t)?;
        let mut out = vec![0.0; self.dim];
        for (c, l) in self.components.iter().zip(&logs) {
            let gamma = (l - lse).exp();
            if gamma == 0.0 {
                continue;
            }
            let v = c.scale * c.scale + t * t;
            for ((o, m), xi) in out.iter_mut().zip(&c.mean).zip(x) {
                *o += gamma * (m - xi) / v;
            }
        }
        Ok(out)
    }

    /// Exact draw from the noised marginal `p(., t)` (t = 0 gives `p_data`).
    pub fn sample_marginal<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> State {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                chosen = i;
                break;
            }
        }
        let c = &self.components[chosen];
        let sd = (c.scale * c.scale + t * t).sqrt();
        State(c.mean.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect())
    }

    pub fn sample_data<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        self.sample_marginal(0.0, rng)
    }
}

/// Closed-form score of the noised mixture marginal.
pub fn mixture_score(model: &MixtureModel, x: &[f64], t: f64) -> Result<Vec<f64>, DiffusionError> {
    model.score(x, t)
}
