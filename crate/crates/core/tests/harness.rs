mod common;

use std::fs;

use arp_core::harness::*;
use arp_core::lambert::lambert;
use arp_core::optimizers::{run_algorithm, Algorithm, RunConfig};
use arp_core::orbits::Vec3;
use arp_core::permutation::{Permutation, Representation};
use arp_core::problem::*;
use common::rk4_propagate;

fn catalog() -> AsteroidCatalog {
    synthetic_catalog(300, 12, DEFAULT_TAU0)
}

fn strip_wall(text: &str, wall_columns: &[usize]) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(k, _)| !wall_columns.contains(k))
                .map(|(_, s)| s.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn generate_names_and_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog();
    let path = cmd_generate(&cat, 10, 42, DEFAULT_TAU0, dir.path()).unwrap();
    assert_eq!(path, dir.path().join("10_42.json"));
    let first = fs::read(&path).unwrap();
    cmd_generate(&cat, 10, 42, DEFAULT_TAU0, dir.path()).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
    let inst = Instance::load(&path).unwrap();
    assert_eq!(inst, generate_instance(&cat, 10, 42, DEFAULT_TAU0).unwrap());
    assert!(cmd_generate(&cat, 0, 42, DEFAULT_TAU0, dir.path()).is_err());
    assert!(cmd_generate(&cat, 301, 42, DEFAULT_TAU0, dir.path()).is_err());
}

#[test]
fn run_writes_histories_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_instance(&catalog(), 5, 3, DEFAULT_TAU0).unwrap();
    let spec = ExperimentSpec {
        repetitions: 2,
        jobs: Some(2),
        ..ExperimentSpec::new(inst.clone(), Algorithm::RandomSearch, dir.path())
    };
    let report = cmd_run(&spec).unwrap();
    assert!(report.failures.is_empty());
    assert_eq!(report.rows.len(), 2);

    let group = dir.path().join("5_3").join("rs-order");
    assert_eq!(spec.group_dir(), group);
    let mut snapshots = Vec::new();
    for run in 0..2 {
        let path = group.join(format!("run{run}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), HISTORY_HEADER.join(","));
        let rows = read_history(&path).unwrap();
        assert_eq!(rows.len(), 400);
        assert!(rows.iter().enumerate().all(|(k, r)| r.eval == k + 1));
        let min = rows.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
        let row = &report.rows[run];
        assert_eq!(row.best_f, min);
        assert_eq!((row.run, row.seed), (run, run as u64));
        for r in &rows {
            assert_eq!(r.f, scalarize(r.dv, r.total_time));
        }
        snapshots.push(strip_wall(&text, &[5]));
    }

    let summary_path = dir.path().join(SUMMARY_FILE);
    let summary_text = fs::read_to_string(&summary_path).unwrap();
    assert_eq!(summary_text.lines().next().unwrap(), SUMMARY_HEADER.join(","));
    assert_eq!(read_summary(&summary_path).unwrap(), report.rows);

    // a second group shares the summary file
    let umm = ExperimentSpec {
        representation: Representation::Rank,
        budget: 20,
        repetitions: 1,
        greedy_seed: true,
        jobs: Some(1),
        ..ExperimentSpec::new(inst.clone(), Algorithm::Umm, dir.path())
    };
    cmd_run(&umm).unwrap();
    assert!(dir.path().join("5_3/umm-rank-greedy/run0.csv").exists());
    assert_eq!(read_summary(&summary_path).unwrap().len(), 3);

    // rerunning replaces rows and reproduces histories apart from timings
    cmd_run(&spec).unwrap();
    let rows = read_summary(&summary_path).unwrap();
    assert_eq!(rows.len(), 3);
    for (run, snapshot) in snapshots.iter().enumerate() {
        let text = fs::read_to_string(group.join(format!("run{run}.csv"))).unwrap();
        assert_eq!(&strip_wall(&text, &[5]), snapshot);
    }
    let no_wall = |r: &SummaryRow| (r.algo.clone(), r.run, r.seed, r.best_f, r.best_dv, r.best_t);
    let rerun: Vec<_> = rows.iter().filter(|r| r.algo == "rs").map(no_wall).collect();
    let first: Vec<_> = report.rows.iter().map(no_wall).collect();
    assert_eq!(rerun, first);
    assert!(!summary_text.is_empty());
}

#[test]
fn failing_runs_leave_error_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = generate_instance(&catalog(), 3, 9, DEFAULT_TAU0).unwrap();
    let spec = ExperimentSpec {
        budget: 10,
        repetitions: 2,
        jobs: Some(1),
        ..ExperimentSpec::new(inst.clone(), Algorithm::RandomSearch, dir.path())
    };
    cmd_run(&spec).unwrap();
    assert_eq!(read_summary(dir.path().join(SUMMARY_FILE)).unwrap().len(), 2);

    inst.asteroids[1].elements.a = -1.0;
    let broken = ExperimentSpec {
        instance: inst,
        ..spec.clone()
    };
    let report = cmd_run(&broken).unwrap();
    assert!(report.rows.is_empty());
    assert_eq!(report.failures.iter().map(|f| f.run).collect::<Vec<_>>(), vec![0, 1]);
    for run in 0..2 {
        assert!(broken.group_dir().join(format!("run{run}.err")).exists());
        assert!(!broken.history_path(run).exists());
    }
    assert!(read_summary(dir.path().join(SUMMARY_FILE)).unwrap().is_empty());

    let path = dir.path().join("broken.json");
    fs::write(&path, broken.instance.to_json().unwrap()).unwrap();
    let err = Instance::load(&path).unwrap_err().to_string();
    assert!(err.contains("semi-major axis"), "{err}");
}

#[test]
fn invalid_specs_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_instance(&catalog(), 3, 9, DEFAULT_TAU0).unwrap();
    let bad_budget = ExperimentSpec {
        budget: 5,
        ..ExperimentSpec::new(inst.clone(), Algorithm::Cego, dir.path())
    };
    assert!(cmd_run(&bad_budget).is_err());
    let no_reps = ExperimentSpec {
        repetitions: 0,
        ..ExperimentSpec::new(inst, Algorithm::Umm, dir.path())
    };
    assert!(cmd_run(&no_reps).is_err());
}

#[test]
fn history_roundtrip() {
    let inst = generate_instance(&catalog(), 4, 1, DEFAULT_TAU0).unwrap();
    let cfg = RunConfig {
        budget: 15,
        ..RunConfig::default()
    };
    let h = run_algorithm(&inst, Algorithm::Umm, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    write_history(&h, fs::File::create(&path).unwrap()).unwrap();
    let back = read_history(&path).unwrap();
    assert_eq!(back.len(), h.entries.len());
    for (a, b) in back.iter().zip(&h.entries) {
        assert_eq!((a.eval, &a.order, a.f, a.dv, a.total_time), (b.eval, &b.order, b.f, b.dv, b.total_time));
        assert!((a.wall_ms - b.wall_ms).abs() <= 5e-4);
    }

    fs::write(&path, "eval,perm,f\n1,0-1,2\n").unwrap();
    assert!(read_history(&path).is_err());
    fs::write(&path, format!("{}\n1,0-0-1,1,1,1,1\n", HISTORY_HEADER.join(","))).unwrap();
    assert!(read_history(&path).is_err());
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

#[test]
fn trajectory_matches_independent_propagation() {
    let inst = generate_instance(&catalog(), 2, 7, DEFAULT_TAU0).unwrap();
    let order = Permutation::new(vec![1, 0]).unwrap();
    let (ev, times, traj) = cmd_evaluate(&inst, &order, 40).unwrap();
    let (ev2, times2) = evaluate_sequence(&inst, &order).unwrap();
    assert_eq!((&ev, &times), (&ev2, &times2));

    let kinds: Vec<ArcKind> = traj.legs.iter().map(|l| l.kind).collect();
    assert_eq!(kinds, vec![ArcKind::Park, ArcKind::Transfer, ArcKind::Park, ArcKind::Transfer]);
    assert_eq!(traj.legs[0].body, "earth");
    assert_eq!(traj.legs[1].body, inst.asteroids[1].id.to_string());
    assert_eq!(traj.legs[2].body, inst.asteroids[1].id.to_string());
    assert_eq!(traj.legs[3].body, inst.asteroids[0].id.to_string());
    assert_eq!(traj.legs[0].t_start_mjd, inst.tau0);
    assert!(traj.legs.windows(2).all(|w| w[0].t_end_mjd == w[1].t_start_mjd));
    assert!((traj.legs[3].t_end_mjd - (inst.tau0 + ev.total_time)).abs() < 1e-9);
    assert!(traj.legs.iter().all(|l| l.samples.len() == 40));

    assert_eq!(traj.impulses.len(), 4);
    let total: f64 = traj.impulses.iter().map(|i| i.dv_kms).sum();
    assert!((total - ev.dv).abs() < 1e-12 * ev.dv.max(1.0));

    let mu = inst.mu;
    let origins = [&inst.earth, &inst.asteroids[1].elements];
    let targets = [&inst.asteroids[1].elements, &inst.asteroids[0].elements];
    for leg in 0..2 {
        let park = &traj.legs[2 * leg];
        let transfer = &traj.legs[2 * leg + 1];
        let n = park.samples.len();
        for (k, s) in park.samples.iter().enumerate() {
            let t = park.t_start_mjd + (park.t_end_mjd - park.t_start_mjd) * k as f64 / (n - 1) as f64;
            let expect = origins[leg].position_at(mu, t);
            assert!((v3(*s) - expect).norm() < 1e-6 * expect.norm());
        }
        let r1 = v3(transfer.samples[0]);
        let r2 = targets[leg].position_at(mu, transfer.t_end_mjd);
        assert!((r1 - origins[leg].position_at(mu, transfer.t_start_mjd)).norm() < 1e-6);
        let tof = transfer.t_end_mjd - transfer.t_start_mjd;
        let sol = lambert(&r1, &r2, tof, mu).unwrap();
        for (k, s) in transfer.samples.iter().enumerate() {
            let dt = tof * k as f64 / (n - 1) as f64;
            let (r, _) = rk4_propagate(r1, sol.v1, mu.value(), dt);
            assert!((v3(*s) - r).norm() < 1e-8 * r.norm(), "leg {leg} sample {k}");
        }
        assert!((v3(*transfer.samples.last().unwrap()) - r2).norm() < 1e-6 * r2.norm());
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub/t.json");
    traj.write(&path).unwrap();
    assert_eq!(Trajectory::load(&path).unwrap(), traj);
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(raw["legs"][1]["kind"], "transfer");
    assert!(raw["impulses"][0]["epoch_mjd"].is_f64());
}

#[test]
fn parse_order_reads_both_representations() {
    let inst = generate_instance(&catalog(), 4, 1, DEFAULT_TAU0).unwrap();
    let order = parse_order(&inst, "2-0-3-1", Representation::Order).unwrap();
    assert_eq!(order.as_slice(), &[2, 0, 3, 1]);
    let from_rank = parse_order(&inst, "1,3,0,2", Representation::Rank).unwrap();
    assert_eq!(from_rank, order);
    assert!(parse_order(&inst, "0-1-2", Representation::Order).is_err());
    assert!(parse_order(&inst, "0-1-1-2", Representation::Order).is_err());
}
