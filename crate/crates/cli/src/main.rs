use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use arp_core::harness::{self, ExperimentSpec, DEFAULT_ARC_SAMPLES};
use arp_core::optimizers::{greedy_nn, Algorithm, DEFAULT_BUDGET, DEFAULT_INIT_DESIGN};
use arp_core::permutation::{Permutation, Representation};
use arp_core::problem::{evaluate_sequence, load_catalog, synthetic_catalog, Evaluation, Instance, TimeVector, DEFAULT_TAU0};

/// Asteroid routing benchmark lab.
#[derive(Parser)]
#[command(name = "arp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an instance from a catalog and write `<out>/<n>_<seed>.json`.
    Generate {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        seed: u64,
        /// Mission start epoch, MJD.
        #[arg(long, default_value_t = DEFAULT_TAU0)]
        tau0: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate one visiting order and write its trajectory.
    Evaluate {
        #[command(flatten)]
        route: RouteArgs,
        /// Trajectory JSON output path.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Nearest-neighbour route.
    Greedy {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run repetitions of one algorithm on one instance.
    Run(RunArgs),
    /// Write the trajectory of an order, or of the best order in a history file.
    ExportTrajectory {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "history", required_unless_present = "history")]
        perm: Option<String>,
        #[arg(long, default_value = "order")]
        repr: Representation,
        /// History CSV written by `run`; its best row is exported.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ARC_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic main-belt catalog in the catalog CSV format.
    SynthCatalog {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TAU0)]
        epoch: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Dash- or comma-separated permutation of 0..n.
    #[arg(long)]
    perm: String,
    /// How `--perm` is read: visiting order, or rank of each asteroid.
    #[arg(long, default_value = "order")]
    repr: Representation,
    #[arg(long, default_value_t = DEFAULT_ARC_SAMPLES)]
    samples: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, default_value = "order")]
    repr: Representation,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    /// Run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed the initial design with the greedy route.
    #[arg(long)]
    greedy_seed: bool,
    #[arg(long, default_value_t = DEFAULT_INIT_DESIGN)]
    init_size: usize,
    /// Parallel runs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    Instance::load(path).with_context(|| format!("cannot load instance {}", path.display()))
}

fn print_evaluation(out: &mut impl Write, order: &Permutation, eval: &Evaluation, times: &TimeVector) -> std::io::Result<()> {
    writeln!(out, "order {order}")?;
    writeln!(out, "dv {}", eval.dv)?;
    writeln!(out, "T {}", eval.total_time)?;
    writeln!(out, "f {}", eval.f)?;
    let t: Vec<String> = times.as_slice().iter().map(|x| x.to_string()).collect();
    writeln!(out, "times {}", t.join(","))
}

fn print_json(order: &Permutation, eval: &Evaluation, times: &TimeVector) -> anyhow::Result<()> {
    let value = serde_json::json!({
        "order": order,
        "times": times,
        "dv": eval.dv,
        "T": eval.total_time,
        "f": eval.f,
        "legs": eval.legs,
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate {
            catalog,
            n,
            seed,
            tau0,
            out,
        } => {
            let cat = load_catalog(&catalog).with_context(|| format!("cannot load catalog {}", catalog.display()))?;
            let path = harness::cmd_generate(&cat, n as usize, seed, tau0, &out)?;
            println!("{}", path.display());
        }
        Command::Evaluate { route, trajectory, json } => {
            let inst = load_instance(&route.instance)?;
            let order = harness::parse_order(&inst, &route.perm, route.repr)?;
            let (eval, times, traj) = harness::cmd_evaluate(&inst, &order, route.samples)?;
            if json {
                print_json(&order, &eval, &times)?;
            } else {
                print_evaluation(&mut std::io::stdout().lock(), &order, &eval, &times)?;
            }
            let path = trajectory.unwrap_or_else(|| PathBuf::from(format!("{}_{}.trajectory.json", inst.name, order)));
            traj.write(&path)?;
            log::info!("trajectory written to {}", path.display());
        }
        Command::Greedy { instance, json } => {
            let inst = load_instance(&instance)?;
            let (sol, _) = greedy_nn(&inst)?;
            if json {
                print_json(&sol.order, &sol.evaluation, &sol.times)?;
            } else {
                print_evaluation(&mut std::io::stdout().lock(), &sol.order, &sol.evaluation, &sol.times)?;
            }
        }
        Command::Run(args) => {
            let inst = load_instance(&args.instance)?;
            let spec = ExperimentSpec {
                representation: args.repr,
                budget: args.budget,
                init_design_size: args.init_size,
                repetitions: args.reps,
                base_seed: args.seed,
                greedy_seed: args.greedy_seed,
                jobs: args.jobs,
                ..ExperimentSpec::new(inst, args.algo, args.out)
            };
            let report = harness::cmd_run(&spec)?;
            for row in &report.rows {
                println!("run {} seed {} best_f {} wall_s {:.3}", row.run, row.seed, row.best_f, row.wall_s);
            }
            for f in &report.failures {
                eprintln!("run {} failed: {}", f.run, f.message);
            }
            if !report.failures.is_empty() {
                bail!("{} of {} runs failed", report.failures.len(), spec.repetitions);
            }
        }
        Command::ExportTrajectory {
            instance,
            perm,
            repr,
            history,
            samples,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let order = match (perm, history) {
                (Some(p), _) => harness::parse_order(&inst, &p, repr)?,
                (None, Some(h)) => {
                    let rows = harness::read_history(&h).with_context(|| format!("cannot read {}", h.display()))?;
                    let best = rows
                        .into_iter()
                        .min_by(|a, b| a.f.total_cmp(&b.f))
                        .with_context(|| format!("{} has no rows", h.display()))?;
                    inst.check_permutation(&best.order)?;
                    best.order
                }
                (None, None) => unreachable!("clap requires --perm or --history"),
            };
            let (_, times) = evaluate_sequence(&inst, &order)?;
            harness::trajectory(&inst, &order, &times, samples)?.write(&out)?;
            println!("{}", out.display());
        }
        Command::SynthCatalog { count, seed, epoch, out } => {
            let cat = synthetic_catalog(count, seed, epoch);
            let file = std::fs::File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            cat.write_csv(std::io::BufWriter::new(file))?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
