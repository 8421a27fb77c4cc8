use super::DiffusionError;
use serde::{Deserialize, Serialize};

/// Strictly decreasing time grid `t_max = times[0] > ... > times[T-1] = t_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub rho: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Schedule {
    /// Number of grid points `T`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Step size `times[i] - times[i + 1]`.
    pub fn delta(&self, i: usize) -> f64 {
        self.times[i] - self.times[i + 1]
    }

    /// `(t, delta)` for every step, in sampling order.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[0] - w[1]))
    }
}

/// Karras power-law grid
/// `t_i = (t_max^(1/rho) + i/(T-1) (t_min^(1/rho) - t_max^(1/rho)))^rho`, `i = 0..T`.
/// The endpoints are stored exactly rather than through the power round trip.
pub fn karras_schedule(steps: usize, rho: f64, t_min: f64, t_max: f64) -> Result<Schedule, DiffusionError> {
    if steps < 2 {
        return Err(DiffusionError::Config(format!("schedule needs T >= 2, got {steps}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(DiffusionError::Config(format!("rho must be positive, got {rho}")));
    }
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
        return Err(DiffusionError::Config(format!("need 0 < t_min < t_max, got t_min = {t_min}, t_max = {t_max}")));
    }
    let hi = t_max.powf(1.0 / rho);
    let lo = t_min.powf(1.0 / rho);
    let last = steps - 1;
    let times: Vec<f64> = (0..steps)
        .map(|i| match i {
            0 => t_max,
            i if i == last => t_min,
            i => (hi + i as f64 / last as f64 * (lo - hi)).powf(rho),
        })
        .collect();
    if times.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater)) {
        return Err(DiffusionError::Schedule(
            "grid is not strictly decreasing (t_min and t_max too close for T)".into(),
        ));
    }
    Ok(Schedule { times, rho, t_min, t_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_points_are_the_endpoints() {
        let s = karras_schedule(2, 7.0, 0.002, 14.648).unwrap();
        assert_eq!(s.times, vec![14.648, 0.002]);
    }

    #[test]
    fn rho_one_is_linear() {
        let s = karras_schedule(3, 1.0, 1.0, 3.0).unwrap();
        assert_eq!(s.times, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn default_grid_head() {
        // Direct evaluation of the power-law formula for i = 1, 2 with T = 20.
        let (hi, lo) = (14.648f64.powf(1.0 / 7.0), 0.002f64.powf(1.0 / 7.0));
        let direct = |i: f64| (hi + i / 19.0 * (lo - hi)).powf(7.0);
        let s = karras_schedule(20, 7.0, 0.002, 14.648).unwrap();
        assert_eq!(s.times[0], 14.648);
        assert!((s.times[1] - direct(1.0)).abs() < 1e-12);
        assert!((s.times[2] - direct(2.0)).abs() < 1e-12);
        // Frozen values of the same formula.
        assert!((s.times[1] - 11.179_319).abs() < 1e-5, "{}", s.times[1]);
        assert!((s.times[2] - 8.439_932).abs() < 1e-5, "{}", s.times[2]);
        assert_eq!(s.times[19], 0.002);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(karras_schedule(1, 7.0, 0.1, 1.0).is_err());
        assert!(karras_schedule(4, 0.0, 0.1, 1.0).is_err());
        assert!(karras_schedule(4, 7.0, 1.0, 1.0).is_err());
        assert!(karras_schedule(4, 7.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_with_exact_endpoints(
            steps in 2usize..300,
            rho in 0.5f64..10.0,
            t_min in 1e-3f64..1.0,
            span in 1.5f64..100.0,
        ) {
            let t_max = t_min * span;
            let s = karras_schedule(steps, rho, t_min, t_max).unwrap();
            prop_assert_eq!(s.len(), steps);
            prop_assert_eq!(s.times[0], t_max);
            prop_assert_eq!(s.times[steps - 1], t_min);
            for i in 0..steps - 1 {
                prop_assert!(s.delta(i) > 0.0);
            }
        }
    }
}
