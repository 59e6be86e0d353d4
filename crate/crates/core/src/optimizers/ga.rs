//! Permutation genetic algorithm used to search the surrogate.

use std::collections::HashMap;

use rand::Rng;

use crate::permutation::{sample_uniform, uniform_index, Permutation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    /// Total fitness evaluations, including the initial population.
    pub budget: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    /// Probability that the fitter contestant wins a tournament.
    pub tournament_prob: f64,
}

impl GaConfig {
    pub fn for_length(n: usize) -> Self {
        Self {
            population: 20,
            budget: 10_000,
            crossover_rate: 0.5,
            mutation_rate: 1.0 / n.max(1) as f64,
            tournament_size: 2,
            tournament_prob: 0.9,
        }
    }
}

/// Cycle crossover: the cycles of the position mapping between the parents
/// are copied alternately from `p1` (first cycle) and `p2`.
pub fn cycle_crossover(p1: &Permutation, p2: &Permutation) -> Permutation {
    assert_eq!(p1.len(), p2.len(), "crossover of permutations with different length");
    let n = p1.len();
    let pos1 = p1.inverse();
    let mut child = vec![usize::MAX; n];
    let mut from_first = true;
    for start in 0..n {
        if child[start] != usize::MAX {
            continue;
        }
        let mut i = start;
        loop {
            child[i] = if from_first { p1[i] } else { p2[i] };
            i = pos1[p2[i]];
            if i == start {
                break;
            }
        }
        from_first = !from_first;
    }
    Permutation::new(child).expect("cycle crossover preserves bijectivity")
}

/// With probability `rate`, exchanges two distinct random positions.
pub fn swap_mutation<R: Rng + ?Sized>(p: &Permutation, rate: f64, rng: &mut R) -> Permutation {
    let mut out = p.clone();
    let n = p.len();
    if n < 2 || rng.gen::<f64>() >= rate {
        return out;
    }
    let i = uniform_index(rng, n);
    let mut j = uniform_index(rng, n - 1);
    if j >= i {
        j += 1;
    }
    out.swap(i, j);
    out
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [(Permutation, f64)], cfg: &GaConfig, rng: &mut R) -> &'a Permutation {
    let mut contestants: Vec<usize> = (0..cfg.tournament_size.max(1)).map(|_| uniform_index(rng, pop.len())).collect();
    // fitter first; stable for equal fitness
    contestants.sort_by(|&a, &b| pop[b].1.total_cmp(&pop[a].1));
    for &c in &contestants[..contestants.len() - 1] {
        if rng.gen::<f64>() < cfg.tournament_prob {
            return &pop[c].0;
        }
    }
    &pop[*contestants.last().expect("non-empty tournament")].0
}

#[derive(Debug, Clone)]
pub struct GaResult {
    /// Fittest individual seen.
    pub champion: (Permutation, f64),
    /// Final population sorted by decreasing fitness.
    pub population: Vec<(Permutation, f64)>,
    pub evaluations: usize,
}

/// Maximizes `fitness` over permutations of length `n`. The population starts
/// from `initial` (truncated or topped up with uniform draws). Generational
/// replacement with elitism: the best individual always survives.
pub fn run_ga<R, F>(n: usize, cfg: &GaConfig, initial: &[Permutation], mut fitness: F, rng: &mut R) -> GaResult
where
    R: Rng + ?Sized,
    F: FnMut(&Permutation) -> f64,
{
    let size = cfg.population.max(1);
    let mut cache: HashMap<Permutation, f64> = HashMap::new();
    let mut evaluations = 0usize;
    let mut eval = |p: &Permutation, evaluations: &mut usize| -> f64 {
        *evaluations += 1;
        *cache.entry(p.clone()).or_insert_with(|| fitness(p))
    };

    let mut pop: Vec<(Permutation, f64)> = initial
        .iter()
        .take(size)
        .cloned()
        .chain(std::iter::repeat_with(|| sample_uniform(n, rng)))
        .take(size)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|p| {
            let f = eval(&p, &mut evaluations);
            (p, f)
        })
        .collect();
    let best_of = |pop: &[(Permutation, f64)]| {
        pop.iter()
            .cloned()
            .reduce(|a, b| if b.1 > a.1 { b } else { a })
            .expect("non-empty population")
    };
    let mut champion = best_of(&pop);

    while evaluations + size <= cfg.budget {
        let mut next = Vec::with_capacity(size);
        for _ in 0..size {
            let a = tournament(&pop, cfg, rng);
            let b = tournament(&pop, cfg, rng);
            let child = if rng.gen::<f64>() < cfg.crossover_rate {
                cycle_crossover(a, b)
            } else {
                a.clone()
            };
            let child = swap_mutation(&child, cfg.mutation_rate, rng);
            let f = eval(&child, &mut evaluations);
            next.push((child, f));
        }
        if !next.iter().any(|(p, _)| *p == champion.0) {
            let worst = next
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(k, _)| k)
                .expect("non-empty population");
            next[worst] = champion.clone();
        }
        pop = next;
        let gen_best = best_of(&pop);
        if gen_best.1 > champion.1 {
            champion = gen_best;
        }
    }

    pop.sort_by(|a, b| b.1.total_cmp(&a.1));
    GaResult {
        champion,
        population: pop,
        evaluations,
    }
}
