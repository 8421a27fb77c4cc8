use super::report::{LemmaReport, Relation};
use crate::diffusion::standard_normal;
use crate::rng::SeedPath;
use crate::state::norm;
use rayon::prelude::*;

/// Fraction of standard normal draws in `R^dim` whose norm lies within `band`
/// of `sqrt(dim)`; passes when at least 0.99.
pub fn sphere_concentration(dim: usize, draws: usize, band: f64, root: SeedPath) -> LemmaReport {
    let target = (dim as f64).sqrt();
    let devs: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|i| (norm(&standard_normal(dim, &mut root.child(i as u64).rng())) - target).abs())
        .collect();
    let inside = devs.iter().filter(|d| **d <= band).count();
    let frac = inside as f64 / draws.max(1) as f64;
    let max_dev = devs.iter().copied().fold(0.0, f64::max);
    LemmaReport::new("lemma5", frac, 0.99, 0.0, Relation::AtLeast)
        .with("dim", dim)
        .with("draws", draws)
        .with("band", band)
        .with("max_deviation", max_dev)
}

/// The band `4 / sqrt(2)`: four standard deviations of the chi distribution.
pub fn default_band() -> f64 {
    4.0 / 2f64.sqrt()
}
