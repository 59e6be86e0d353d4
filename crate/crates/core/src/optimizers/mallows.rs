//! Mallows model under Kendall's-τ distance.
//!
//! `P(σ) ∝ exp(-θ · d(σ, σ₀))`. The distance to the centre decomposes into
//! independent insertion counts `V_i ∈ {0, …, n-1-i}` with
//! `P(V_i = r) ∝ exp(-θ r)`, which gives both exact sampling and the expected
//! distance.

use rand::Rng;

use crate::error::{Error, Result};
use crate::permutation::Permutation;

#[derive(Debug, Clone, PartialEq)]
pub struct MallowsState {
    pub center: Permutation,
    pub theta: f64,
    pub iteration: usize,
}

impl MallowsState {
    pub fn new(center: Permutation, theta: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::domain(format!("dispersion must be finite and >= 0, got {theta}")));
        }
        Ok(Self {
            center,
            theta,
            iteration: 0,
        })
    }
}

/// Mean of a geometric distribution truncated to `0..m`.
fn truncated_geometric_mean(m: usize, theta: f64) -> f64 {
    let q = (-theta).exp();
    let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
    for r in 0..m {
        num += r as f64 * w;
        den += w;
        w *= q;
    }
    num / den
}

/// Expected Kendall distance to the centre for permutations of length `n`.
pub fn expected_distance(n: usize, theta: f64) -> f64 {
    (1..=n).map(|m| truncated_geometric_mean(m, theta)).sum()
}

/// Expected distance under a uniform draw, `n(n-1)/4`.
pub fn uniform_expected_distance(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 4.0
}

const THETA_TOL: f64 = 1e-10;

/// Dispersion whose expected distance equals `target`, by bisection.
pub fn theta_for_target(n: usize, target: f64) -> Result<f64> {
    let max = uniform_expected_distance(n);
    if !(target > 0.0 && target <= max) {
        return Err(Error::domain(format!(
            "target expected distance {target} outside (0, {max}] for n = {n}"
        )));
    }
    if target == max {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while expected_distance(n, hi) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::domain(format!("target expected distance {target} too small")));
        }
    }
    while hi - lo > THETA_TOL {
        let mid = 0.5 * (lo + hi);
        if expected_distance(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draw from the Mallows model by sampling the insertion vector and decoding
/// it as a Lehmer code.
pub fn mallows_sample<R: Rng + ?Sized>(state: &MallowsState, rng: &mut R) -> Permutation {
    let n = state.center.len();
    let q = (-state.theta).exp();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut code = Vec::with_capacity(n);
    for i in 0..n {
        let m = n - i;
        // inverse CDF over r in 0..m with weights q^r
        let mut weights = Vec::with_capacity(m);
        let mut w = 1.0;
        for _ in 0..m {
            weights.push(w);
            w *= q;
        }
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut r = m - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                r = k;
                break;
            }
            u -= w;
        }
        code.push(remaining.remove(r));
    }
    let offset = Permutation::new(code).expect("Lehmer decoding yields a permutation");
    offset.compose(&state.center)
}

/// Consensus permutation from weight-averaged positions.
///
/// Entry `p[i]` is read as the position of item `i`. Items are ranked by their
/// weighted mean position; ties go to the lower item index.
pub fn weighted_borda(perms: &[Permutation], weights: &[f64]) -> Result<Permutation> {
    if perms.is_empty() || perms.len() != weights.len() {
        return Err(Error::domain(format!(
            "{} permutations with {} weights",
            perms.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::domain("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::domain("all weights are zero"));
    }
    let n = perms[0].len();
    if perms.iter().any(|p| p.len() != n) {
        return Err(Error::domain("permutations of different length"));
    }
    let mut mean = vec![0.0; n];
    for (p, &w) in perms.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (m, &pos) in mean.iter_mut().zip(p.as_slice()) {
            *m += w * pos as f64;
        }
    }
    let mut items: Vec<usize> = (0..n).collect();
    items.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    for (rank, &item) in items.iter().enumerate() {
        out[item] = rank;
    }
    Permutation::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permutation::{all_permutations, kendall_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Closed form of the expected distance.
    fn closed_form(n: usize, theta: f64) -> f64 {
        let q = (-theta).exp();
        let mut e = n as f64 * q / (1.0 - q);
        for j in 1..=n {
            let qj = (-(j as f64) * theta).exp();
            e -= j as f64 * qj / (1.0 - qj);
        }
        e
    }

    #[test]
    fn expectation_matches_closed_form() {
        for n in [2, 5, 10, 15] {
            for theta in [0.05, 0.3, 1.0, 2.5] {
                let a = expected_distance(n, theta);
                let b = closed_form(n, theta);
                assert!((a - b).abs() < 1e-9 * b.max(1.0), "n={n} θ={theta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn expectation_by_enumeration() {
        let n = 5;
        let theta = 0.7;
        let center = Permutation::new(vec![3, 0, 4, 1, 2]).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for p in all_permutations(n) {
            let d = kendall_distance(&p, &center).unwrap() as f64;
            let w = (-theta * d).exp();
            num += d * w;
            den += w;
        }
        assert!((expected_distance(n, theta) - num / den).abs() < 1e-12);
    }

    #[test]
    fn theta_is_monotone_in_target() {
        let a = theta_for_target(10, 5.0).unwrap();
        let b = theta_for_target(10, 15.0).unwrap();
        assert!(a > b);
        assert_eq!(theta_for_target(10, 22.5).unwrap(), 0.0);
        assert!(theta_for_target(10, 22.4999).unwrap() < 1e-3);
        assert!(theta_for_target(10, 0.0).is_err());
        assert!(theta_for_target(10, 23.0).is_err());
    }

    #[test]
    fn concentrated_model_returns_center() {
        let center = Permutation::new(vec![2, 4, 0, 1, 3]).unwrap();
        let state = MallowsState::new(center.clone(), 50.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(mallows_sample(&state, &mut rng), center);
        }
    }

    #[test]
    fn uniform_at_zero_dispersion() {
        let center = Permutation::new(vec![1, 3, 0, 2]).unwrap();
        let state = MallowsState::new(center, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 48_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts.entry(mallows_sample(&state, &mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 23 degrees of freedom, 0.999 quantile is about 49.7
        assert!(chi2 < 49.7, "chi2 = {chi2}");
    }

    #[test]
    fn borda_examples() {
        let a = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        assert_eq!(weighted_borda(std::slice::from_ref(&a), &[1.0]).unwrap(), a);
        assert_eq!(weighted_borda(&[a.clone(), a.clone(), a.clone()], &[0.1, 5.0, 0.0]).unwrap(), a);
        let id = Permutation::identity(3);
        let rev = Permutation::reversed(3);
        assert_eq!(weighted_borda(&[id.clone(), rev.clone()], &[1.0, 0.0]).unwrap(), id);
        assert!(weighted_borda(&[id, rev], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn borda_ties_prefer_low_index() {
        let id = Permutation::identity(3);
        let rev = Permutation::reversed(3);
        // mean positions all equal to 1
        assert_eq!(weighted_borda(&[id.clone(), rev], &[1.0, 1.0]).unwrap(), id);
    }
}
