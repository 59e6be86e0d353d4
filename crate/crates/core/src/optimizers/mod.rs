//! Outer optimizers over visiting orders.

pub mod cego;
pub mod ga;
pub mod gp;
pub mod greedy;
pub mod mallows;
pub mod random_search;
pub mod umm;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::{maxmin_design, Permutation, Representation};
use crate::problem::{evaluate_sequence, Evaluation, Instance, TimeVector};

pub use cego::cego;
pub use greedy::greedy_nn;
pub use random_search::random_search;
pub use umm::umm;

pub const DEFAULT_BUDGET: usize = 400;
pub const DEFAULT_INIT_DESIGN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    #[serde(rename = "rs")]
    RandomSearch,
    Umm,
    Cego,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::RandomSearch => "rs",
            Algorithm::Umm => "umm",
            Algorithm::Cego => "cego",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(Self::Greedy),
            "rs" | "random" | "random-search" => Ok(Self::RandomSearch),
            "umm" => Ok(Self::Umm),
            "cego" => Ok(Self::Cego),
            other => Err(Error::domain(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Number of true objective evaluations.
    pub budget: usize,
    pub representation: Representation,
    pub init_design_size: usize,
    pub seed: u64,
    /// Seed the initial design with the greedy solution.
    pub greedy_seed: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            representation: Representation::Order,
            init_design_size: DEFAULT_INIT_DESIGN,
            seed: 0,
            greedy_seed: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.init_design_size == 0 || self.budget < self.init_design_size {
            return Err(Error::domain(format!(
                "need budget >= init design size >= 1 (budget {}, init {})",
                self.budget, self.init_design_size
            )));
        }
        Ok(())
    }

    /// Generator for the initial design.
    pub(crate) fn design_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Generator for the search itself, an independent ChaCha stream.
    pub(crate) fn search_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

/// A visiting order with its optimized times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub order: Permutation,
    pub times: TimeVector,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// 1-based evaluation index.
    pub eval: usize,
    /// Visiting order that was evaluated.
    pub order: Permutation,
    pub f: f64,
    pub dv: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    /// Milliseconds since the start of the run.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub entries: Vec<HistoryEntry>,
    pub best: Option<Solution>,
}

impl RunHistory {
    pub fn best_f(&self) -> Option<f64> {
        self.best.as_ref().map(|s| s.evaluation.f)
    }

    /// Best objective value after each evaluation.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.entries
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.f);
                Some(*best)
            })
            .collect()
    }

    pub fn wall_ms(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.wall_ms)
    }
}

/// Counts and records true objective evaluations of one run.
pub(crate) struct Recorder<'a> {
    instance: &'a Instance,
    representation: Representation,
    start: Instant,
    history: RunHistory,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(instance: &'a Instance, representation: Representation) -> Self {
        Self {
            instance,
            representation,
            start: Instant::now(),
            history: RunHistory {
                entries: Vec::new(),
                best: None,
            },
        }
    }

    pub(crate) fn evaluations(&self) -> usize {
        self.history.entries.len()
    }

    /// Evaluates an internal permutation, converted through the run's
    /// representation, and returns its objective value.
    pub(crate) fn evaluate(&mut self, internal: &Permutation) -> Result<f64> {
        let order = self.representation.to_order(internal);
        let (evaluation, times) = evaluate_sequence(self.instance, &order)?;
        let f = evaluation.f;
        self.history.entries.push(HistoryEntry {
            eval: self.history.entries.len() + 1,
            order: order.clone(),
            f,
            dv: evaluation.dv,
            total_time: evaluation.total_time,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        if self.history.best_f().is_none_or(|b| f < b) {
            self.history.best = Some(Solution {
                order,
                times,
                evaluation,
            });
        }
        Ok(f)
    }

    pub(crate) fn finish(self) -> RunHistory {
        self.history
    }
}

/// Initial design in evaluation order, in the run's internal representation.
///
/// Without greedy seeding this is a max-min design of `init_design_size`
/// permutations. With greedy seeding the greedy order is the design's first
/// member but is placed last, so the random members are evaluated first.
pub fn initial_design(instance: &Instance, config: &RunConfig) -> Result<Vec<Permutation>> {
    config.validate()?;
    let mut rng = config.design_rng();
    let seeds = if config.greedy_seed {
        let (greedy, _) = greedy_nn(instance)?;
        vec![config.representation.from_order(&greedy.order)]
    } else {
        Vec::new()
    };
    let mut design = maxmin_design(instance.n, config.init_design_size, &mut rng, &seeds)?;
    if config.greedy_seed {
        design.rotate_left(1);
    }
    Ok(design)
}

/// Runs one algorithm on one instance, building the initial design where the
/// algorithm needs one.
pub fn run_algorithm(instance: &Instance, algorithm: Algorithm, config: &RunConfig) -> Result<RunHistory> {
    config.validate()?;
    match algorithm {
        Algorithm::Greedy => {
            let start = Instant::now();
            let (solution, _) = greedy_nn(instance)?;
            let ev = &solution.evaluation;
            Ok(RunHistory {
                entries: vec![HistoryEntry {
                    eval: 1,
                    order: solution.order.clone(),
                    f: ev.f,
                    dv: ev.dv,
                    total_time: ev.total_time,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                }],
                best: Some(solution),
            })
        }
        Algorithm::RandomSearch => random_search(instance, config),
        Algorithm::Umm => umm(instance, config, &initial_design(instance, config)?),
        Algorithm::Cego => cego(instance, config, &initial_design(instance, config)?),
    }
}
