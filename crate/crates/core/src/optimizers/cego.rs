//! Surrogate-assisted search: a Gaussian process over Kendall distance, with
//! expected improvement maximized by a genetic algorithm.

use std::collections::HashSet;

use crate::error::Result;
use crate::permutation::{sample_uniform, Permutation};
use crate::problem::Instance;

use super::ga::{run_ga, swap_mutation, GaConfig};
use super::gp::{expected_improvement, gp_fit, gp_fit_local, GaussianProcess, SurrogateState};
use super::{Recorder, RunConfig, RunHistory};

/// The whole θ grid is rescanned while the data set is small and whenever its
/// size is a multiple of this; otherwise the climb starts from the last θ.
const FULL_SCAN_EVERY: usize = 50;
const MUTATION_TRIES: usize = 1000;

pub fn cego(instance: &Instance, config: &RunConfig, init: &[Permutation]) -> Result<RunHistory> {
    config.validate()?;
    let n = instance.n;
    let mut rng = config.search_rng();
    let mut rec = Recorder::new(instance, config.representation);
    let ga_cfg = GaConfig::for_length(n);

    let mut state = SurrogateState::new(Vec::with_capacity(config.budget));
    let mut seen: HashSet<Permutation> = HashSet::new();
    for p in init.iter().take(config.budget) {
        let f = rec.evaluate(p)?;
        state.evaluated.push((p.clone(), f));
        seen.insert(p.clone());
    }

    let mut theta_index = None;
    while rec.evaluations() < config.budget {
        let m = state.evaluated.len();
        let fitted = match theta_index {
            Some(k) if m > FULL_SCAN_EVERY && !m.is_multiple_of(FULL_SCAN_EVERY) => gp_fit_local(&mut state, k),
            _ => gp_fit(&mut state),
        };
        let candidate = match fitted {
            Ok(gp) => {
                theta_index = Some(gp.theta_index);
                propose(&gp, &state, &seen, &ga_cfg, n, &mut rng)
            }
            Err(err) => {
                log::warn!("surrogate fit failed ({err}); sampling uniformly");
                sample_uniform(n, &mut rng)
            }
        };
        let f = rec.evaluate(&candidate)?;
        state.evaluated.push((candidate.clone(), f));
        seen.insert(candidate);
    }
    Ok(rec.finish())
}

fn propose<R: rand::Rng + ?Sized>(
    gp: &GaussianProcess,
    state: &SurrogateState,
    seen: &HashSet<Permutation>,
    cfg: &GaConfig,
    n: usize,
    rng: &mut R,
) -> Permutation {
    let best_f = state
        .evaluated
        .iter()
        .map(|(_, f)| *f)
        .fold(f64::INFINITY, f64::min);
    let incumbent = state
        .evaluated
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p.clone());

    let code = gp.pair_code().clone();
    let mut buf = vec![0u64; max_words(n)];
    let fitness = |p: &Permutation| {
        code.encode(p.as_slice(), &mut buf);
        let pred = gp.predict_code(&buf);
        expected_improvement(pred.mean, pred.sd, best_f)
    };
    let res = run_ga(n, cfg, incumbent.as_slice(), fitness, rng);

    if !seen.contains(&res.champion.0) {
        return res.champion.0;
    }
    if let Some((p, _)) = res.population.iter().find(|(p, _)| !seen.contains(p)) {
        return p.clone();
    }
    let mut p = res.champion.0;
    for _ in 0..MUTATION_TRIES {
        p = swap_mutation(&p, 1.0, rng);
        if !seen.contains(&p) {
            return p;
        }
    }
    // every nearby permutation has been evaluated; fall back to a uniform draw
    sample_uniform(n, rng)
}

fn max_words(n: usize) -> usize {
    crate::permutation::max_kendall(n).div_ceil(64).max(1)
}
