use super::RewardError;
use crate::state::{dot, sq_dist};
use serde::{Deserialize, Serialize};

/// Closed-form reward functions of a clean state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RewardSpec {
    /// `l . x`; harmonic.
    Linear {
        weights: Vec<f64>,
    },
    /// `x^T A x + b . x`; Laplacian `2 tr(A)`.
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    /// `exp(-|x - c|^2 / (2 w^2))`, peak value 1 at the center.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
    },
    /// `-|x - target|`.
    NegDistance {
        target: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    /// Weighted sum of other rewards.
    Weighted {
        terms: Vec<WeightedTerm>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub weight: f64,
    pub spec: RewardSpec,
}

impl RewardSpec {
    /// Dimension the reward is defined on, `None` for dimension-free rewards.
    pub fn dim(&self) -> Option<usize> {
        match self {
            RewardSpec::Linear { weights } => Some(weights.len()),
            RewardSpec::Quadratic { b, .. } => Some(b.len()),
            RewardSpec::GaussianBump { center, .. } => Some(center.len()),
            RewardSpec::NegDistance { target } => Some(target.len()),
            RewardSpec::Constant { .. } => None,
            RewardSpec::Weighted { terms } => terms.iter().find_map(|t| t.spec.dim()),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), RewardError> {
        if let Some(d) = self.dim() {
            if d != dim {
                return Err(RewardError::DimensionMismatch { expected: d, got: dim });
            }
        }
        match self {
            RewardSpec::Linear { weights } => {
                if weights.iter().all(|w| *w == 0.0) {
                    return Err(RewardError::InvalidSpec("linear weights must be nonzero".into()));
                }
            }
            RewardSpec::Quadratic { a, b } => {
                if a.len() != b.len() || a.iter().any(|row| row.len() != b.len()) {
                    return Err(RewardError::InvalidSpec("quadratic matrix must be square".into()));
                }
                for (i, row) in a.iter().enumerate() {
                    for (j, v) in row.iter().take(i).enumerate() {
                        if (v - a[j][i]).abs() > 1e-12 * (1.0 + v.abs()) {
                            return Err(RewardError::InvalidSpec("quadratic matrix must be symmetric".into()));
                        }
                    }
                }
            }
            RewardSpec::GaussianBump { width, .. } => {
                if width.is_nan() || *width <= 0.0 {
                    return Err(RewardError::InvalidSpec("bump width must be positive".into()));
                }
            }
            RewardSpec::NegDistance { .. } | RewardSpec::Constant { .. } => {}
            RewardSpec::Weighted { terms } => {
                if terms.is_empty() {
                    return Err(RewardError::InvalidSpec("weighted reward needs terms".into()));
                }
                for t in terms {
                    t.spec.validate(dim)?;
                }
            }
        }
        Ok(())
    }

    /// Evaluates the reward at a clean state.
    pub fn eval(&self, x: &[f64]) -> Result<f64, RewardError> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(RewardError::DimensionMismatch { expected: d, got: x.len() });
            }
        }
        Ok(match self {
            RewardSpec::Linear { weights } => dot(weights, x),
            RewardSpec::Quadratic { a, b } => {
                let quad: f64 = a.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum();
                quad + dot(b, x)
            }
            RewardSpec::GaussianBump { center, width } => (-sq_dist(x, center) / (2.0 * width * width)).exp(),
            RewardSpec::NegDistance { target } => -sq_dist(x, target).sqrt(),
            RewardSpec::Constant { value } => *value,
            RewardSpec::Weighted { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.weight * t.spec.eval(x)?;
                }
                acc
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let lin = RewardSpec::Linear { weights: vec![2.0, -1.0] };
        assert_eq!(lin.eval(&[0.0, 0.0]).unwrap(), 0.0);
        let bump = RewardSpec::GaussianBump { center: vec![1.0, 2.0], width: 0.3 };
        assert_eq!(bump.eval(&[1.0, 2.0]).unwrap(), 1.0);
        let quad = RewardSpec::Quadratic { a: vec![vec![1.0, 0.0], vec![0.0, 1.0]], b: vec![0.0, 0.0] };
        assert_eq!(quad.eval(&[1.0, 2.0]).unwrap(), 5.0);
        let nd = RewardSpec::NegDistance { target: vec![3.0, 4.0] };
        assert_eq!(nd.eval(&[0.0, 0.0]).unwrap(), -5.0);
        let sum = RewardSpec::Weighted {
            terms: vec![
                WeightedTerm { weight: 0.5, spec: quad.clone() },
                WeightedTerm { weight: 2.0, spec: RewardSpec::Constant { value: 1.0 } },
            ],
        };
        assert_eq!(sum.eval(&[1.0, 2.0]).unwrap(), 4.5);
    }

    #[test]
    fn laplacians_by_finite_differences() {
        let lap = |r: &RewardSpec, x: &[f64]| {
            let h = 1e-3;
            let c = r.eval(x).unwrap();
            (0..x.len())
                .map(|d| {
                    let mut p = x.to_vec();
                    let mut m = x.to_vec();
                    p[d] += h;
                    m[d] -= h;
                    (r.eval(&p).unwrap() - 2.0 * c + r.eval(&m).unwrap()) / (h * h)
                })
                .sum::<f64>()
        };
        let x = [0.3, -0.7];
        let lin = RewardSpec::Linear { weights: vec![1.0, 3.0] };
        assert!(lap(&lin, &x).abs() < 1e-6);
        let quad = RewardSpec::Quadratic { a: vec![vec![0.5, 0.1], vec![0.1, 0.25]], b: vec![1.0, 0.0] };
        assert!((lap(&quad, &x) - 1.5).abs() < 1e-6);
        let bump = RewardSpec::GaussianBump { center: vec![0.0, 0.0], width: 0.5 };
        assert!(lap(&bump, &[0.0, 0.0]) < 0.0);
        assert!(lap(&bump, &[1.5, 0.0]) > 0.0);
    }

    #[test]
    fn validation_and_mismatch() {
        let lin = RewardSpec::Linear { weights: vec![1.0, 0.0] };
        assert!(matches!(lin.eval(&[1.0]), Err(RewardError::DimensionMismatch { .. })));
        assert!(RewardSpec::Linear { weights: vec![0.0, 0.0] }.validate(2).is_err());
        assert!(RewardSpec::GaussianBump { center: vec![0.0], width: 0.0 }.validate(1).is_err());
        assert!(RewardSpec::Quadratic { a: vec![vec![1.0, 2.0], vec![0.0, 1.0]], b: vec![0.0, 0.0] }
            .validate(2)
            .is_err());
        assert!(RewardSpec::Constant { value: 3.0 }.validate(7).is_ok());
    }

    #[test]
    fn serde_shape() {
        let r: RewardSpec =
            serde_json::from_str(r#"{"type": "gaussian_bump", "center": [1.0], "width": 0.5}"#).unwrap();
        assert_eq!(r, RewardSpec::GaussianBump { center: vec![1.0], width: 0.5 });
    }
}
