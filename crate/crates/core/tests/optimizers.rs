mod common;

use arp_core::optimizers::*;
use arp_core::orbits::GravParam;
use arp_core::permutation::{Permutation, Representation};
use arp_core::problem::*;
use common::circular;

fn small_instance(n: usize) -> Instance {
    let cat = synthetic_catalog(300, 12, DEFAULT_TAU0);
    generate_instance(&cat, n, 5, DEFAULT_TAU0).unwrap()
}

fn config(budget: usize, repr: Representation, seed: u64, greedy: bool) -> RunConfig {
    RunConfig {
        budget,
        representation: repr,
        seed,
        greedy_seed: greedy,
        ..RunConfig::default()
    }
}

fn strip_wall(h: &RunHistory) -> Vec<(usize, Permutation, f64, f64, f64)> {
    h.entries.iter().map(|e| (e.eval, e.order.clone(), e.f, e.dv, e.total_time)).collect()
}

#[test]
fn every_algorithm_honours_the_contract() {
    let inst = small_instance(6);
    for algo in [Algorithm::RandomSearch, Algorithm::Umm, Algorithm::Cego] {
        for repr in [Representation::Order, Representation::Rank] {
            let cfg = config(25, repr, 3, false);
            let h = run_algorithm(&inst, algo, &cfg).unwrap();
            assert_eq!(h.entries.len(), 25, "{algo}-{repr}");
            assert!(h.entries.iter().enumerate().all(|(k, e)| e.eval == k + 1));
            let best = h.best_so_far();
            assert!(best.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(h.best_f().unwrap(), *best.last().unwrap());
            let sol = h.best.as_ref().unwrap();
            assert_eq!(evaluate_full(&inst, &sol.order, &sol.times).unwrap(), sol.evaluation);
            for e in &h.entries {
                assert_eq!(e.f, scalarize(e.dv, e.total_time));
            }
            assert!(h.entries.windows(2).all(|w| w[1].wall_ms >= w[0].wall_ms));

            let again = run_algorithm(&inst, algo, &cfg).unwrap();
            assert_eq!(strip_wall(&h), strip_wall(&again), "{algo}-{repr} not deterministic");
            let other = run_algorithm(&inst, algo, &config(25, repr, 4, false)).unwrap();
            assert_ne!(strip_wall(&h), strip_wall(&other));
        }
    }
}

#[test]
fn budget_equal_to_design_evaluates_only_the_design() {
    let inst = small_instance(5);
    for repr in [Representation::Order, Representation::Rank] {
        let cfg = config(10, repr, 8, false);
        let design: Vec<Permutation> = initial_design(&inst, &cfg).unwrap().iter().map(|p| repr.to_order(p)).collect();
        for algo in [Algorithm::Umm, Algorithm::Cego] {
            let h = run_algorithm(&inst, algo, &cfg).unwrap();
            let orders: Vec<Permutation> = h.entries.iter().map(|e| e.order.clone()).collect();
            assert_eq!(orders, design, "{algo}-{repr}");
        }
    }
}

#[test]
fn informed_runs_evaluate_greedy_tenth() {
    let inst = small_instance(7);
    let (greedy, _) = greedy_nn(&inst).unwrap();
    for (algo, repr) in [(Algorithm::Umm, Representation::Rank), (Algorithm::Cego, Representation::Order)] {
        for seed in 0..3 {
            let h = run_algorithm(&inst, algo, &config(20, repr, seed, true)).unwrap();
            assert_eq!(h.entries[9].order, greedy.order);
            assert_eq!(h.entries[9].f, greedy.evaluation.f);
            assert!(h.entries[..9].iter().all(|e| e.order != greedy.order));
            assert!(h.best_f().unwrap() <= greedy.evaluation.f);
        }
    }
}

#[test]
fn greedy_follows_static_geometry() {
    // every body shares one circular orbit, so the geometry never changes
    let tau0 = DEFAULT_TAU0;
    let earth = circular(1.0, 0.0, tau0);
    let phases = [1.6, 0.4, 2.4, 0.9];
    let asteroids = phases.iter().map(|&ph| circular(1.0, ph, tau0)).collect();
    let inst = Instance::from_orbits(earth, asteroids, tau0, GravParam::sun(), 0);
    let (sol, ev) = greedy_nn(&inst).unwrap();
    assert_eq!(sol.order.as_slice(), &[1, 3, 0, 2]);
    assert_eq!(sol.evaluation, ev);
    assert_eq!(evaluate_full(&inst, &sol.order, &sol.times).unwrap(), ev);

    let h = run_algorithm(&inst, Algorithm::Greedy, &RunConfig::default()).unwrap();
    assert_eq!(h.entries.len(), 1);
    assert_eq!(h.entries[0].order, sol.order);
}

#[test]
fn greedy_on_single_asteroid() {
    let inst = small_instance(1);
    let (sol, _) = greedy_nn(&inst).unwrap();
    assert_eq!(sol.order, Permutation::identity(1));
    let (ev, t) = evaluate_sequence(&inst, &sol.order).unwrap();
    assert_eq!((ev, t), (sol.evaluation, sol.times));
}

#[test]
fn random_search_finds_best_of_two_orders() {
    let inst = small_instance(2);
    let f01 = evaluate_sequence(&inst, &Permutation::identity(2)).unwrap().0.f;
    let f10 = evaluate_sequence(&inst, &Permutation::reversed(2)).unwrap().0.f;
    let h = random_search(&inst, &config(12, Representation::Order, 1, false)).unwrap();
    assert_eq!(h.best_f().unwrap(), f01.min(f10));
}

#[test]
fn invalid_configs_rejected() {
    let inst = small_instance(4);
    assert!(run_algorithm(&inst, Algorithm::Umm, &config(5, Representation::Order, 0, false)).is_err());
    let zero = RunConfig {
        init_design_size: 0,
        ..RunConfig::default()
    };
    assert!(run_algorithm(&inst, Algorithm::Cego, &zero).is_err());
    assert!("sa".parse::<Algorithm>().is_err());
    assert_eq!("RS".parse::<Algorithm>().unwrap(), Algorithm::RandomSearch);
}
