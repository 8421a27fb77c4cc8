use super::report::{LemmaReport, Relation};
use crate::rng::SeedPath;
use crate::state::State;
use rand::seq::SliceRandom;
use rayon::prelude::*;

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value
/// (Kolmogorov tail with the Stephens small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    (d, kolmogorov_tail((en + 0.12 + 0.11 / en) * d))
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Energy-distance permutation test; returns the statistic and
/// `p = (1 + #{permuted >= observed}) / (1 + permutations)`.
pub fn energy_permutation_test(a: &[State], b: &[State], permutations: usize, root: SeedPath) -> (f64, f64) {
    let pooled: Vec<&State> = a.iter().chain(b.iter()).collect();
    let total = pooled.len();
    let dist: Vec<f32> = (0..total)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = pooled[i];
            pooled
                .iter()
                .map(move |pj| pi.iter().zip(pj.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() as f32)
        })
        .collect();
    let row_sums: Vec<f64> = dist.chunks(total).map(|r| r.iter().map(|v| *v as f64).sum()).collect();
    let na = a.len();
    let stat = |mask: &[f32]| -> f64 {
        let v: Vec<f64> =
            dist.par_chunks(total).map(|row| row.iter().zip(mask).map(|(d, m)| d * m).sum::<f32>() as f64).collect();
        let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..total {
            if mask[i] > 0.5 {
                saa += v[i];
            } else {
                sab += v[i];
                sbb += row_sums[i] - v[i];
            }
        }
        let (n, m) = (na as f64, (total - na) as f64);
        2.0 * sab / (n * m) - saa / (n * n) - sbb / (m * m)
    };
    let mut mask: Vec<f32> = (0..total).map(|i| if i < na { 1.0 } else { 0.0 }).collect();
    let observed = stat(&mask);
    let mut rng = root.rng();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        mask.shuffle(&mut rng);
        if stat(&mask) >= observed {
            exceed += 1;
        }
    }
    (observed, (1 + exceed) as f64 / (1 + permutations) as f64)
}

/// Per-coordinate KS tests plus the energy permutation test; passes iff the
/// smallest KS p-value and the energy p-value both exceed 0.01.
pub fn distribution_equivalence(
    a: &[State],
    b: &[State],
    permutations: usize,
    root: SeedPath,
) -> Result<LemmaReport, String> {
    if a.len() < 500 || b.len() < 500 {
        return Err(format!("ensembles need at least 500 samples, got {} and {}", a.len(), b.len()));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|s| s.len() != dim) {
        return Err("ensembles differ in dimension".into());
    }
    let ks: Vec<f64> = (0..dim)
        .map(|d| {
            let xa: Vec<f64> = a.iter().map(|s| s[d]).collect();
            let xb: Vec<f64> = b.iter().map(|s| s[d]).collect();
            ks_two_sample(&xa, &xb).1
        })
        .collect();
    let min_ks = ks.iter().copied().fold(1.0, f64::min);
    let (energy, energy_p) = energy_permutation_test(a, b, permutations, root);
    let p = min_ks.min(energy_p);
    Ok(LemmaReport::new("equivalence", p, 0.01, 0.0, Relation::AtLeast)
        .require("energy_above_threshold", energy_p > 0.01)
        .require("ks_above_threshold", min_ks > 0.01)
        .with("ks_p_values", ks)
        .with("energy_statistic", energy)
        .with("energy_p", energy_p)
        .with("permutations", permutations)
        .with("samples", serde_json::json!([a.len(), b.len()])))
}
