//! `splitmax` CLI: generate synthetic datasets, run algorithm-by-budget
//! sweeps, and measure objective structure on small instances.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use splitmax::combined::EvalMode;
use splitmax::data::{self, CoordMode, Money, SyntheticConfig, TimeInterval};
use splitmax::diagnostics;
use splitmax::diffusion::EdgeProbabilityModel;
use splitmax::harness::{
    self, emit_plot_data, run_experiment, ExperimentConfig, HarnessError, InstanceSource,
    PlotKind,
};
use splitmax::optimize::{Algorithm, MergeRule, Prepared};

#[derive(Parser)]
#[command(name = "splitmax", version, about = "Budget splitting across billboard and social-network advertising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write result rows as CSV.
    Run(RunArgs),
    /// Generate a synthetic dataset directory (CSV files).
    Gen(GenArgs),
    /// Measure structure (bisubmodularity ratio, curvature, bound) of a
    /// small instance and print a JSON report.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description file (TOML). Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithms to run (repeatable).
    #[arg(long = "algo")]
    algorithms: Vec<Algorithm>,
    /// Budgets to sweep (repeatable).
    #[arg(long = "budget")]
    budgets: Vec<Money>,
    /// Instance directory with trajectories.csv, billboards.csv, graph.csv.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Edge probability model.
    #[arg(long = "prob-model", value_parser = ["uniform", "wc", "trivalency", "explicit"])]
    prob_model: Option<String>,
    /// Uniform model probability.
    #[arg(long)]
    pc: Option<f64>,
    /// Weighted cascade: use the literal 1/out-degree(source) reading.
    #[arg(long = "wc-literal-out")]
    wc_literal_out: bool,
    /// Monte Carlo simulation count.
    #[arg(long = "sims")]
    sims: Option<u32>,
    /// Sampling parameter of the randomized greedy.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Influence radius in meters.
    #[arg(long)]
    lambda: Option<f64>,
    /// Evaluate exactly by live-edge enumeration (small instances only).
    #[arg(long)]
    exact: bool,
    /// Base rng seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-channel merge rule for ranking baselines.
    #[arg(long, value_parser = parse_merge)]
    merge: Option<MergeRule>,
    /// Coordinate system of the dataset files.
    #[arg(long, value_parser = parse_coords)]
    coords: Option<CoordMode>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-run selection traces as JSON lines next to the output.
    #[arg(long)]
    trace: bool,
    /// Additionally emit a long-format plot CSV of the given kind.
    #[arg(long = "plot", value_parser = ["influence_vs_budget", "split_vs_algo", "time_vs_budget"])]
    plot: Option<String>,
}

fn parse_merge(s: &str) -> Result<MergeRule, String> {
    match s {
        "rank" => Ok(MergeRule::Rank),
        "alternate" => Ok(MergeRule::Alternate),
        other => Err(format!("unknown merge rule {other:?} (expected rank or alternate)")),
    }
}

fn parse_coords(s: &str) -> Result<CoordMode, String> {
    match s {
        "wgs84" => Ok(CoordMode::Wgs84),
        "planar" => Ok(CoordMode::Planar),
        other => Err(format!("unknown coordinate mode {other:?} (expected wgs84 or planar)")),
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    billboards: usize,
    #[arg(long)]
    edges: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory for the three CSV files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    checkins: usize,
    /// Square extent side in meters.
    #[arg(long, default_value_t = 1000.0)]
    extent: f64,
    /// Horizon length in seconds.
    #[arg(long, default_value_t = 86_400)]
    horizon: i64,
    /// Slot duration in seconds.
    #[arg(long, default_value_t = 21_600)]
    delta: i64,
    /// Influence radius in meters used for cost assignment.
    #[arg(long, default_value_t = 100.0)]
    lambda: f64,
    /// Seed cost scale k.
    #[arg(long = "seed-cost-scale", default_value_t = 1000.0)]
    seed_cost_scale: f64,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Instance directory (CSV files).
    #[arg(long)]
    instance: PathBuf,
    /// Coordinate system of the dataset files.
    #[arg(long, value_parser = parse_coords)]
    coords: Option<CoordMode>,
    /// Per-side element cap for the enumeration.
    #[arg(long = "max-elems", default_value_t = 10)]
    max_elems: usize,
    #[arg(long, default_value_t = 1000.0)]
    budget: Money,
    #[arg(long, default_value_t = 100.0)]
    lambda: f64,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("splitmax: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn resolve_prob_model(
    name: Option<&str>,
    pc: Option<f64>,
    literal_out: bool,
    seed: u64,
    fallback: EdgeProbabilityModel,
) -> Result<EdgeProbabilityModel, HarnessError> {
    Ok(match name {
        None => fallback,
        Some("uniform") => EdgeProbabilityModel::Uniform {
            pc: pc.unwrap_or(0.1),
        },
        Some("wc") => EdgeProbabilityModel::WeightedCascade {
            literal_out,
        },
        Some("trivalency") => EdgeProbabilityModel::Trivalency { rng_seed: seed },
        Some("explicit") => EdgeProbabilityModel::Explicit,
        Some(other) => {
            return Err(HarnessError::Config(format!(
                "unknown probability model {other:?}"
            )))
        }
    })
}

fn cmd_run(args: RunArgs) -> Result<(), HarnessError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => {
            let dir = args.instance.clone().ok_or_else(|| {
                HarnessError::Config("either --config or --instance is required".into())
            })?;
            ExperimentConfig {
                instance: InstanceSource::Files { dir },
                budgets: vec![],
                algorithms: Algorithm::ALL.to_vec(),
                prob_model: EdgeProbabilityModel::Uniform { pc: 0.1 },
                epsilon: 0.01,
                lambda: 100.0,
                sims: 1000,
                exact: false,
                rng_seed: 0,
                merge: MergeRule::Rank,
                coords: CoordMode::Wgs84,
                out: PathBuf::from("results.csv"),
                trace: false,
            }
        }
    };

    // flags win over the config file
    if let Some(dir) = args.instance {
        config.instance = InstanceSource::Files { dir };
    }
    if !args.algorithms.is_empty() {
        config.algorithms = args.algorithms;
    }
    if !args.budgets.is_empty() {
        config.budgets = args.budgets;
    }
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    config.prob_model = resolve_prob_model(
        args.prob_model.as_deref(),
        args.pc,
        args.wc_literal_out,
        config.rng_seed,
        config.prob_model,
    )?;
    if let Some(sims) = args.sims {
        config.sims = sims;
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(lambda) = args.lambda {
        config.lambda = lambda;
    }
    if args.exact {
        config.exact = true;
    }
    if let Some(merge) = args.merge {
        config.merge = merge;
    }
    if let Some(coords) = args.coords {
        config.coords = coords;
    }
    if let Some(out) = args.out {
        config.out = out;
    }
    if args.trace {
        config.trace = true;
    }

    let (rows, traces) = run_experiment(&config)?;
    harness::write_results(&rows, &config.out)?;
    eprintln!(
        "splitmax: wrote {} rows to {}",
        rows.len(),
        config.out.display()
    );

    if config.trace {
        let trace_path = config.out.with_extension("trace.jsonl");
        let mut lines = String::new();
        for (algorithm, budget, trace) in &traces {
            let entry = serde_json::json!({
                "algorithm": algorithm,
                "budget": budget,
                "steps": trace.steps,
            });
            lines.push_str(&entry.to_string());
            lines.push('\n');
        }
        std::fs::write(&trace_path, lines).map_err(|e| {
            HarnessError::Data(splitmax::data::DataError::Io {
                path: trace_path.display().to_string(),
                source: e,
            })
        })?;
        eprintln!("splitmax: wrote traces to {}", trace_path.display());
    }

    if let Some(kind) = args.plot {
        let kind: PlotKind = kind.parse().map_err(HarnessError::Config)?;
        let plot_path = config.out.with_extension("plot.csv");
        let text = emit_plot_data(&rows, kind)?;
        std::fs::write(&plot_path, text).map_err(|e| {
            HarnessError::Data(splitmax::data::DataError::Io {
                path: plot_path.display().to_string(),
                source: e,
            })
        })?;
        eprintln!("splitmax: wrote plot data to {}", plot_path.display());
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), HarnessError> {
    let config = SyntheticConfig {
        n_users: args.users,
        n_billboards: args.billboards,
        n_edges: args.edges,
        extent_m: args.extent,
        horizon: TimeInterval {
            start: 0,
            end: args.horizon,
        },
        delta_slot: args.delta,
        checkins_per_user: args.checkins,
        lambda: args.lambda,
        budget: 0.0,
        prob_model: EdgeProbabilityModel::Uniform { pc: 0.1 },
        seed_cost_scale: args.seed_cost_scale,
        rng_seed: args.seed,
    };
    let instance = data::generate_synthetic(&config);
    std::fs::create_dir_all(&args.out).map_err(|e| {
        HarnessError::Data(splitmax::data::DataError::Io {
            path: args.out.display().to_string(),
            source: e,
        })
    })?;
    data::save_trajectories(&instance.trajectories, &args.out.join("trajectories.csv"))?;
    data::save_billboards(instance.slots.billboards(), &args.out.join("billboards.csv"))?;
    data::save_graph(&instance.graph, &args.out.join("graph.csv"))?;
    eprintln!(
        "splitmax: wrote synthetic dataset ({} users, {} billboards, {} edges) to {}",
        args.users,
        args.billboards,
        instance.graph.edge_count(),
        args.out.display()
    );
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), HarnessError> {
    let config = ExperimentConfig {
        instance: InstanceSource::Files {
            dir: args.instance.clone(),
        },
        budgets: vec![args.budget],
        algorithms: vec![Algorithm::Tpg],
        prob_model: EdgeProbabilityModel::Explicit,
        epsilon: 0.01,
        lambda: args.lambda,
        sims: 1,
        exact: true,
        rng_seed: args.seed.unwrap_or(0),
        merge: MergeRule::Rank,
        coords: args.coords.unwrap_or_default(),
        out: PathBuf::from("unused.csv"),
        trace: false,
    };
    let instance = harness::load_instance_dir(&args.instance, &config)?;
    let (instance, truncated) = diagnostics::truncate_instance(&instance, args.max_elems)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    // exact mode caps still apply after truncation
    let prep = Prepared::new(&instance);
    prep.evaluator(EvalMode::Exact)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut report = diagnostics::structure_report(&prep)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    report.truncated = truncated;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}
