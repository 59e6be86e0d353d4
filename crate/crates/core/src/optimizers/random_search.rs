use crate::error::Result;
use crate::permutation::sample_uniform;
use crate::problem::Instance;

use super::{Recorder, RunConfig, RunHistory};

/// Evaluates `budget` uniformly drawn permutations.
pub fn random_search(instance: &Instance, config: &RunConfig) -> Result<RunHistory> {
    config.validate()?;
    let mut rng = config.search_rng();
    let mut rec = Recorder::new(instance, config.representation);
    while rec.evaluations() < config.budget {
        let p = sample_uniform(instance.n, &mut rng);
        rec.evaluate(&p)?;
    }
    Ok(rec.finish())
}
