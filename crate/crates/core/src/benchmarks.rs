//! The shipped benchmark mixtures and reward presets.

use crate::diffusion::MixtureModel;
use crate::rewards::RewardSpec;

pub const MIXTURE_2D: &str = include_str!("../benchmarks/mixture2d.json");
pub const MIXTURE_8D: &str = include_str!("../benchmarks/mixture8d.json");

/// Three-component 2-D mixture.
pub fn mixture_2d() -> MixtureModel {
    MixtureModel::from_json(MIXTURE_2D).expect("bundled 2-D benchmark is valid")
}

/// Four-component 8-D mixture.
pub fn mixture_8d() -> MixtureModel {
    MixtureModel::from_json(MIXTURE_8D).expect("bundled 8-D benchmark is valid")
}

/// Resolves `benchmark:2d` / `benchmark:8d`.
pub fn by_name(name: &str) -> Option<MixtureModel> {
    match name {
        "benchmark:2d" | "2d" => Some(mixture_2d()),
        "benchmark:8d" | "8d" => Some(mixture_8d()),
        _ => None,
    }
}

/// `l = (1, ..., 1) / sqrt(N)`.
pub fn linear_reward(dim: usize) -> RewardSpec {
    RewardSpec::Linear { weights: vec![1.0 / (dim as f64).sqrt(); dim] }
}

/// `-|x|^2 / 2 + x_0`.
pub fn quadratic_reward(dim: usize) -> RewardSpec {
    let mut a = vec![vec![0.0; dim]; dim];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = -0.5;
    }
    let mut b = vec![0.0; dim];
    b[0] = 1.0;
    RewardSpec::Quadratic { a, b }
}

/// Unit-width bump at the origin.
pub fn bump_reward(dim: usize) -> RewardSpec {
    RewardSpec::GaussianBump { center: vec![0.0; dim], width: 1.0 }
}

/// Distance to `(1, ..., 1)`, negated.
pub fn neg_distance_reward(dim: usize) -> RewardSpec {
    RewardSpec::NegDistance { target: vec![1.0; dim] }
}

/// Named reward presets: `linear`, `quadratic`, `bump`, `neg_distance`.
pub fn reward_preset(name: &str, dim: usize) -> Option<RewardSpec> {
    match name {
        "linear" => Some(linear_reward(dim)),
        "quadratic" => Some(quadratic_reward(dim)),
        "bump" => Some(bump_reward(dim)),
        "neg_distance" | "neg-distance" => Some(neg_distance_reward(dim)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_models_load() {
        assert_eq!(mixture_2d().dim(), 2);
        assert_eq!(mixture_8d().dim(), 8);
        assert!(by_name("benchmark:3d").is_none());
        for name in ["linear", "quadratic", "bump", "neg_distance"] {
            reward_preset(name, 8).unwrap().validate(8).unwrap();
        }
    }
}
