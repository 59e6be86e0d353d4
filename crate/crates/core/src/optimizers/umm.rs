//! Unbalanced Mallows model search.

use crate::error::Result;
use crate::permutation::Permutation;
use crate::problem::Instance;

use super::mallows::{mallows_sample, theta_for_target, uniform_expected_distance, weighted_borda, MallowsState};
use super::{Recorder, RunConfig, RunHistory};

/// Target expected distances for `iterations` sampling steps: from half the
/// uniform expectation down to 1, linearly. Targets are capped at the uniform
/// expectation, which only matters for n ≤ 2.
pub fn distance_schedule(n: usize, iterations: usize) -> Vec<f64> {
    let max = uniform_expected_distance(n);
    let first = max / 2.0;
    (0..iterations)
        .map(|k| {
            let frac = if iterations > 1 {
                k as f64 / (iterations - 1) as f64
            } else {
                0.0
            };
            (first + (1.0 - first) * frac).min(max)
        })
        .collect()
}

/// Dispersion for each sampling step of [`distance_schedule`].
pub fn theta_schedule(n: usize, iterations: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Ok(vec![0.0; iterations]);
    }
    distance_schedule(n, iterations)
        .into_iter()
        .map(|d| theta_for_target(n, d))
        .collect()
}

/// Inverse-rank weights: `1/k` for the k-th best value, normalized to sum to
/// one. Ties keep input order.
pub fn rank_weights(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    let mut w = vec![0.0; m];
    for (k, &i) in idx.iter().enumerate() {
        w[i] = 1.0 / ((k + 1) as f64 * total);
    }
    w
}

pub fn umm(instance: &Instance, config: &RunConfig, init: &[Permutation]) -> Result<RunHistory> {
    config.validate()?;
    let mut rng = config.search_rng();
    let mut rec = Recorder::new(instance, config.representation);
    let mut perms = Vec::with_capacity(config.budget);
    let mut values = Vec::with_capacity(config.budget);

    for p in init.iter().take(config.budget) {
        values.push(rec.evaluate(p)?);
        perms.push(p.clone());
    }
    let thetas = theta_schedule(instance.n, config.budget - rec.evaluations())?;
    for (k, theta) in thetas.into_iter().enumerate() {
        let center = if perms.is_empty() {
            Permutation::identity(instance.n)
        } else {
            weighted_borda(&perms, &rank_weights(&values))?
        };
        let mut state = MallowsState::new(center, theta)?;
        state.iteration = k;
        let p = mallows_sample(&state, &mut rng);
        values.push(rec.evaluate(&p)?);
        perms.push(p);
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::mallows::expected_distance;

    #[test]
    fn schedule_endpoints() {
        let d = distance_schedule(10, 390);
        assert_eq!(d[0], 22.5 / 2.0);
        assert_eq!(*d.last().unwrap(), 1.0);
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        let th = theta_schedule(10, 390).unwrap();
        assert!((expected_distance(10, th[0]) - 11.25).abs() < 1e-8);
        assert!((expected_distance(10, th[389]) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tiny_instances() {
        assert_eq!(theta_schedule(1, 5).unwrap(), vec![0.0; 5]);
        let th = theta_schedule(2, 3).unwrap();
        assert_eq!(th.len(), 3);
        assert_eq!(distance_schedule(4, 1), vec![1.5]);
    }

    #[test]
    fn weights_follow_rank() {
        let w = rank_weights(&[3.0, 1.0, 2.0]);
        let h = 1.0 + 0.5 + 1.0 / 3.0;
        for (a, b) in w.iter().zip([1.0 / (3.0 * h), 1.0 / h, 0.5 / h]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let tie = rank_weights(&[1.0, 1.0]);
        assert!(tie[0] > tie[1]);
    }
}
