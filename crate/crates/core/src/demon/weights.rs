use super::DemonError;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Temperature of a weight rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    /// Population standard deviation of the estimates.
    Adaptive,
    Fixed(f64),
    /// Uniform weights for Boltzmann.
    Infinite,
}

impl Temperature {
    pub fn validate(self) -> Result<(), DemonError> {
        match self {
            Temperature::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
                Err(DemonError::Config(format!("fixed temperature must be positive, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temperature::Adaptive => f.write_str("adaptive"),
            Temperature::Infinite => f.write_str("inf"),
            Temperature::Fixed(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Temperature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adaptive" => Ok(Temperature::Adaptive),
            "inf" | "infinity" | "infinite" => Ok(Temperature::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| format!("temperature must be 'adaptive', 'inf' or a number, got '{s}'"))
                .and_then(|t| {
                    if t.is_infinite() && t > 0.0 {
                        Ok(Temperature::Infinite)
                    } else if t > 0.0 {
                        Ok(Temperature::Fixed(t))
                    } else {
                        Err(format!("temperature must be positive, got {t}"))
                    }
                }),
        }
    }
}

impl Serialize for Temperature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Temperature::Fixed(t) => s.serialize_f64(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Temperature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Temperature;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"adaptive\", \"inf\" or a positive number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Temperature, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Temperature, E> {
                v.to_string().parse().map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Temperature, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Temperature, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(V)
    }
}

/// Weights `b_k` for the candidate noises, with the centre and temperature
/// that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    /// Temperature actually used; `None` when the rule degenerated to uniform.
    pub tau: Option<f64>,
    pub mu_hat: Option<f64>,
    /// Set when zero spread forced uniform weights.
    pub degenerate: bool,
}

impl WeightVector {
    pub fn uniform(k: usize, value: f64, mu_hat: Option<f64>) -> Self {
        WeightVector { weights: vec![value; k], tau: None, mu_hat, degenerate: true }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check(estimates: &[f64]) -> Result<(), DemonError> {
    if estimates.is_empty() {
        return Err(DemonError::Config("no reward estimates to weight".into()));
    }
    if estimates.iter().any(|r| !r.is_finite()) {
        return Err(DemonError::NonFinite("reward estimate".into()));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    crate::state::stable_mean(xs)
}

fn population_std(xs: &[f64], centre: f64) -> f64 {
    (xs.iter().map(|x| (x - centre).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

const SPREAD_FLOOR: f64 = 1e-12;

/// `b_k = tanh((R_k - mu_hat) / tau)` with `mu_hat` the mean estimate.
pub fn tanh_weights(estimates: &[f64], mode: Temperature) -> Result<WeightVector, DemonError> {
    check(estimates)?;
    tanh_weights_about(estimates, mean(estimates), mode)
}

/// `b_k = tanh((R_k - centre) / tau)`. Adaptive `tau` is the population
/// standard deviation of the estimates around their own mean.
pub fn tanh_weights_about(estimates: &[f64], centre: f64, mode: Temperature) -> Result<WeightVector, DemonError> {
    check(estimates)?;
    if !centre.is_finite() {
        return Err(DemonError::NonFinite("tanh centre".into()));
    }
    let k = estimates.len();
    let mu = mean(estimates);
    let all_equal = estimates.iter().all(|r| *r == estimates[0]);
    let tau = match mode {
        Temperature::Adaptive => population_std(estimates, mu),
        Temperature::Fixed(t) => t,
        Temperature::Infinite => return Err(DemonError::Config("tanh weights need a finite temperature".into())),
    };
    if all_equal || tau < SPREAD_FLOOR {
        return Ok(WeightVector::uniform(k, 1.0, Some(centre)));
    }
    let weights = estimates.iter().map(|r| ((r - centre) / tau).tanh()).collect();
    Ok(WeightVector { weights, tau: Some(tau), mu_hat: Some(centre), degenerate: false })
}

/// `b_k = softmax(R_k / tau)`, max-subtracted.
pub fn boltzmann_weights(estimates: &[f64], mode: Temperature) -> Result<WeightVector, DemonError> {
    check(estimates)?;
    let k = estimates.len();
    let mu = mean(estimates);
    let tau = match mode {
        Temperature::Infinite => return Ok(WeightVector::uniform(k, 1.0 / k as f64, Some(mu))),
        Temperature::Fixed(t) => t,
        Temperature::Adaptive => population_std(estimates, mu),
    };
    if estimates.iter().all(|r| *r == estimates[0]) || tau < SPREAD_FLOOR && mode == Temperature::Adaptive {
        return Ok(WeightVector::uniform(k, 1.0 / k as f64, Some(mu)));
    }
    let max = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = estimates.iter().map(|r| ((r - max) / tau).exp()).collect();
    let total: f64 = exps.iter().sum();
    let weights = exps.iter().map(|e| e / total).collect();
    Ok(WeightVector { weights, tau: Some(tau), mu_hat: Some(mu), degenerate: false })
}

/// Tanh weights over `+1` for chosen candidates and `-1` for the rest.
/// Choosing none or all of them yields uniform weights.
pub fn selection_weights(chosen: &[usize], k: usize) -> Result<WeightVector, DemonError> {
    if k == 0 {
        return Err(DemonError::Config("selection over zero candidates".into()));
    }
    let mut labels = vec![-1.0; k];
    for &i in chosen {
        if i >= k {
            return Err(DemonError::Selection(format!("candidate index {i} out of range for K = {k}")));
        }
        labels[i] = 1.0;
    }
    tanh_weights(&labels, Temperature::Adaptive)
}
