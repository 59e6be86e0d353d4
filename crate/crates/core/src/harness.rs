//! Experiment orchestration: instance files, run histories, the shared
//! summary table and trajectory export.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert::lambert;
use crate::optimizers::{run_algorithm, Algorithm, HistoryEntry, RunConfig, RunHistory};
use crate::orbits::{propagate, StateVector};
use crate::permutation::{Permutation, Representation};
use crate::problem::{
    evaluate_full, evaluate_sequence, generate_instance, AsteroidCatalog, Evaluation, Instance, TimeVector,
};

pub const HISTORY_HEADER: [&str; 6] = ["eval", "perm", "f", "dv", "T", "wall_ms"];
pub const SUMMARY_HEADER: [&str; 10] = [
    "instance",
    "algo",
    "repr",
    "greedy_seed",
    "run",
    "seed",
    "best_f",
    "best_dv",
    "best_T",
    "wall_s",
];
pub const SUMMARY_FILE: &str = "summary.csv";
/// Positions sampled per exported arc, endpoints included.
pub const DEFAULT_ARC_SAMPLES: usize = 100;

/// Writes `instance` as `<dir>/<name>.json` and returns the path.
pub fn write_instance(instance: &Instance, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", instance.name));
    fs::write(&path, instance.to_json()?)?;
    Ok(path)
}

/// Draws an instance from `catalog` and writes it to `dir`.
pub fn cmd_generate(catalog: &AsteroidCatalog, n: usize, seed: u64, tau0: f64, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let instance = generate_instance(catalog, n, seed, tau0)?;
    write_instance(&instance, dir)
}

/// Parses a visiting order given in `repr` and checks it against `instance`.
pub fn parse_order(instance: &Instance, text: &str, repr: Representation) -> Result<Permutation> {
    let p: Permutation = text.parse()?;
    instance.check_permutation(&p)?;
    Ok(repr.to_order(&p))
}

// ---------------------------------------------------------------------------
// Trajectory export

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Park,
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryArc {
    pub kind: ArcKind,
    /// `"earth"` or the catalog id of an asteroid. For a transfer this is the
    /// body being flown to.
    pub body: String,
    pub t_start_mjd: f64,
    pub t_end_mjd: f64,
    /// Heliocentric ecliptic positions, km.
    pub samples: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    pub epoch_mjd: f64,
    pub dv_kms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub legs: Vec<TrajectoryArc>,
    pub impulses: Vec<Impulse>,
}

impl Trajectory {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(dir) = path.as_ref().parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn sample_epochs(start: f64, end: f64, count: usize) -> impl Iterator<Item = f64> {
    let count = count.max(2);
    (0..count).map(move |k| {
        if k == count - 1 {
            end
        } else {
            start + (end - start) * k as f64 / (count - 1) as f64
        }
    })
}

/// Sampled arcs and impulses of a route with fixed times: one parking arc and
/// one transfer arc per leg, and a departure and an arrival impulse per leg.
pub fn trajectory(instance: &Instance, order: &Permutation, times: &TimeVector, samples: usize) -> Result<Trajectory> {
    let eval = evaluate_full(instance, order, times)?;
    let mu = instance.mu;
    let mut legs = Vec::with_capacity(2 * instance.n);
    let mut impulses = Vec::with_capacity(2 * instance.n);
    for (k, leg) in eval.legs.iter().enumerate() {
        let (from, from_name) = if k == 0 {
            (&instance.earth, "earth".to_string())
        } else {
            let rec = &instance.asteroids[order[k - 1]];
            (&rec.elements, rec.id.to_string())
        };
        let target = &instance.asteroids[order[k]];
        let park_start = leg.depart - leg.t_park;
        legs.push(TrajectoryArc {
            kind: ArcKind::Park,
            body: from_name,
            t_start_mjd: park_start,
            t_end_mjd: leg.depart,
            samples: sample_epochs(park_start, leg.depart, samples)
                .map(|t| from.position_at(mu, t).into())
                .collect(),
        });

        let r1 = from.position_at(mu, leg.depart);
        let r2 = target.elements.position_at(mu, leg.arrive);
        let sol = lambert(&r1, &r2, leg.t_transit, mu).map_err(|e| e.at_leg(k))?;
        let s0 = StateVector {
            r: r1,
            v: sol.v1,
            epoch: leg.depart,
        };
        let transfer = sample_epochs(leg.depart, leg.arrive, samples)
            .map(|t| propagate(&s0, mu, t - leg.depart).map(|s| s.r.into()))
            .collect::<Result<Vec<[f64; 3]>>>()
            .map_err(|e| e.at_leg(k))?;
        legs.push(TrajectoryArc {
            kind: ArcKind::Transfer,
            body: target.id.to_string(),
            t_start_mjd: leg.depart,
            t_end_mjd: leg.arrive,
            samples: transfer,
        });
        impulses.push(Impulse {
            epoch_mjd: leg.depart,
            dv_kms: leg.dv_out,
        });
        impulses.push(Impulse {
            epoch_mjd: leg.arrive,
            dv_kms: leg.dv_in,
        });
    }
    Ok(Trajectory { legs, impulses })
}

/// Evaluates `order` with inner-solver times and samples its trajectory.
pub fn cmd_evaluate(instance: &Instance, order: &Permutation, samples: usize) -> Result<(Evaluation, TimeVector, Trajectory)> {
    let (eval, times) = evaluate_sequence(instance, order)?;
    let traj = trajectory(instance, order, &times, samples)?;
    Ok((eval, times, traj))
}

// ---------------------------------------------------------------------------
// Histories

pub fn write_history<W: Write>(history: &RunHistory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_HEADER)?;
    for e in &history.entries {
        w.write_record([
            e.eval.to_string(),
            e.order.to_string(),
            e.f.to_string(),
            e.dv.to_string(),
            e.total_time.to_string(),
            format!("{:.3}", e.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history(path: impl AsRef<Path>) -> Result<Vec<HistoryEntry>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HISTORY_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected history header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what));
        out.push(HistoryEntry {
            eval: rec[0].parse().map_err(|_| bad("eval"))?,
            order: rec[1].parse().map_err(|_| bad("perm"))?,
            f: num(2, "f")?,
            dv: num(3, "dv")?,
            total_time: num(4, "T")?,
            wall_ms: num(5, "wall_ms")?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub instance: Instance,
    pub algorithm: Algorithm,
    pub representation: Representation,
    pub budget: usize,
    pub init_design_size: usize,
    pub repetitions: usize,
    /// Run `r` uses seed `base_seed + r`.
    pub base_seed: u64,
    pub greedy_seed: bool,
    pub out_dir: PathBuf,
    /// Parallel runs; `None` uses every available core.
    pub jobs: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(instance: Instance, algorithm: Algorithm, out_dir: impl Into<PathBuf>) -> Self {
        let defaults = RunConfig::default();
        Self {
            instance,
            algorithm,
            representation: defaults.representation,
            budget: defaults.budget,
            init_design_size: defaults.init_design_size,
            repetitions: 1,
            base_seed: 0,
            greedy_seed: false,
            out_dir: out_dir.into(),
            jobs: None,
        }
    }

    /// `<algo>-<repr>[-greedy]`
    pub fn group_name(&self) -> String {
        let mut s = format!("{}-{}", self.algorithm, self.representation);
        if self.greedy_seed {
            s.push_str("-greedy");
        }
        s
    }

    pub fn group_dir(&self) -> PathBuf {
        self.out_dir.join(&self.instance.name).join(self.group_name())
    }

    pub fn history_path(&self, run: usize) -> PathBuf {
        self.group_dir().join(format!("run{run}.csv"))
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn run_config(&self, run: usize) -> RunConfig {
        RunConfig {
            budget: self.budget,
            representation: self.representation,
            init_design_size: self.init_design_size,
            seed: self.seed(run),
            greedy_seed: self.greedy_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::domain("at least one repetition is required"));
        }
        if self.jobs == Some(0) {
            return Err(Error::domain("jobs must be positive"));
        }
        self.run_config(0).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub algo: String,
    pub repr: String,
    pub greedy_seed: bool,
    pub run: usize,
    pub seed: u64,
    pub best_f: f64,
    pub best_dv: f64,
    #[serde(rename = "best_T")]
    pub best_t: f64,
    pub wall_s: f64,
}

impl SummaryRow {
    fn key(&self) -> (&str, &str, &str, bool, usize) {
        (&self.instance, &self.algo, &self.repr, self.greedy_seed, self.run)
    }

    fn record(&self) -> [String; 10] {
        [
            self.instance.clone(),
            self.algo.clone(),
            self.repr.clone(),
            self.greedy_seed.to_string(),
            self.run.to_string(),
            self.seed.to_string(),
            self.best_f.to_string(),
            self.best_dv.to_string(),
            self.best_t.to_string(),
            format!("{:.6}", self.wall_s),
        ]
    }
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SUMMARY_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected summary header {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&tmp)?));
        w.write_record(SUMMARY_HEADER)?;
        for row in rows {
            w.write_record(row.record())?;
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Inserts, replaces or (with `row = None`) removes the summary row of one run.
/// The file stays sorted by key, so its content does not depend on the order
/// in which runs finish. A lock file serializes concurrent writers, including
/// other processes.
fn update_summary(out_dir: &Path, key: &SummaryRow, row: Option<&SummaryRow>) -> Result<()> {
    static LOCAL: Mutex<()> = Mutex::new(());
    let _guard = LOCAL.lock().unwrap_or_else(|e| e.into_inner());
    fs::create_dir_all(out_dir)?;
    let lock = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(out_dir.join(format!("{SUMMARY_FILE}.lock")))?;
    lock.lock()?;

    let path = out_dir.join(SUMMARY_FILE);
    let mut rows = if path.exists() { read_summary(&path)? } else { Vec::new() };
    rows.retain(|r| r.key() != key.key());
    rows.extend(row.cloned());
    rows.sort_by(|a, b| {
        let (ia, aa, ra, ga, na) = a.key();
        let (ib, ab, rb, gb, nb) = b.key();
        (ia, aa, ra, ga, na).cmp(&(ib, ab, rb, gb, nb))
    });
    let res = write_summary(&path, &rows);
    lock.unlock()?;
    res
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Completed runs in run order.
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<RunFailure>,
}

fn execute_run(spec: &ExperimentSpec, run: usize) -> Result<SummaryRow> {
    let history = run_algorithm(&spec.instance, spec.algorithm, &spec.run_config(run))?;
    let best = history
        .best
        .as_ref()
        .ok_or_else(|| Error::domain("run finished without evaluations"))?;
    let path = spec.history_path(run);
    write_history(&history, BufWriter::new(File::create(&path)?))?;
    Ok(SummaryRow {
        instance: spec.instance.name.clone(),
        algo: spec.algorithm.to_string(),
        repr: spec.representation.to_string(),
        greedy_seed: spec.greedy_seed,
        run,
        seed: spec.seed(run),
        best_f: best.evaluation.f,
        best_dv: best.evaluation.dv,
        best_t: best.evaluation.total_time,
        wall_s: (history.wall_ms() * 1e3).round() / 1e6,
    })
}

/// Runs every repetition of `spec`, writing `run<r>.csv` per completed run and
/// upserting its row in `<out_dir>/summary.csv`. A failing run leaves a
/// `run<r>.err` file instead and the remaining runs proceed.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let dir = spec.group_dir();
    fs::create_dir_all(&dir)?;

    let one = |run: usize| -> Result<std::result::Result<SummaryRow, RunFailure>> {
        let err_path = dir.join(format!("run{run}.err"));
        let placeholder = SummaryRow {
            instance: spec.instance.name.clone(),
            algo: spec.algorithm.to_string(),
            repr: spec.representation.to_string(),
            greedy_seed: spec.greedy_seed,
            run,
            seed: spec.seed(run),
            best_f: f64::NAN,
            best_dv: f64::NAN,
            best_t: f64::NAN,
            wall_s: f64::NAN,
        };
        match execute_run(spec, run) {
            Ok(row) => {
                if err_path.exists() {
                    fs::remove_file(&err_path)?;
                }
                update_summary(&spec.out_dir, &row, Some(&row))?;
                log::info!("{} {} run {run}: best f {}", spec.instance.name, spec.group_name(), row.best_f);
                Ok(Ok(row))
            }
            Err(err) => {
                log::error!("{} {} run {run} failed: {err}", spec.instance.name, spec.group_name());
                fs::write(&err_path, format!("{err}\n"))?;
                let stale = spec.history_path(run);
                if stale.exists() {
                    fs::remove_file(stale)?;
                }
                update_summary(&spec.out_dir, &placeholder, None)?;
                Ok(Err(RunFailure {
                    run,
                    message: err.to_string(),
                }))
            }
        }
    };

    let outcomes: Vec<_> = match spec.jobs {
        Some(1) => (0..spec.repetitions).map(one).collect(),
        jobs => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
            pool.install(|| (0..spec.repetitions).into_par_iter().map(one).collect())
        }
    };

    let mut report = ExperimentReport {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for outcome in outcomes {
        match outcome? {
            Ok(row) => report.rows.push(row),
            Err(f) => report.failures.push(f),
        }
    }
    Ok(report)
}
