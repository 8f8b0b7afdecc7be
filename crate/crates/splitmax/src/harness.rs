//! Experiment harness: load or synthesize an instance, run an
//! algorithm-by-budget sweep, and emit machine-readable result rows.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::combined::EvalMode;
use crate::data::{
    self, CoordMode, DataError, Money, ProblemInstance, SlotId, SyntheticConfig, TimeInterval,
};
use crate::diffusion::EdgeProbabilityModel;
use crate::exec;
use crate::optimize::{
    baseline_hdh, baseline_pagerank, baseline_random, baseline_top_k, randomized_greedy, tpg,
    Algorithm, GreedyTrace, MergeRule, Prepared, RunResult,
};

pub const RESULT_HEADER: &str = "algorithm,budget,phi_total,phi_billboard,phi_social,phi_interaction,split_pct_billboard,split_pct_social,wall_time_ms,rng_seed";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("optimizer failure: {0}")]
    Optimize(#[from] crate::optimize::OptimizeError),
}

impl HarnessError {
    /// CLI exit code: 2 for configuration problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Optimize(_) => 2,
            HarnessError::Data(_) => 3,
        }
    }
}

/// Where the instance comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum InstanceSource {
    /// CSV files `trajectories.csv`, `billboards.csv`, `graph.csv` in `dir`.
    Files { dir: PathBuf },
    /// Synthetic generation parameters.
    Synthetic {
        users: usize,
        billboards: usize,
        edges: usize,
        #[serde(default = "default_checkins")]
        checkins_per_user: usize,
        #[serde(default = "default_extent")]
        extent_m: f64,
        #[serde(default = "default_horizon")]
        horizon_s: i64,
        #[serde(default = "default_delta")]
        delta_slot_s: i64,
        #[serde(default = "default_seed_cost_scale")]
        seed_cost_scale: f64,
    },
}

fn default_checkins() -> usize {
    3
}
fn default_extent() -> f64 {
    1000.0
}
fn default_horizon() -> i64 {
    86_400
}
fn default_delta() -> i64 {
    21_600
}
fn default_seed_cost_scale() -> f64 {
    data::DEFAULT_SEED_COST_SCALE
}

/// A full experiment description. Defaults follow the reference setup:
/// epsilon 0.01, lambda 100 m, 1000 simulations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    #[serde(deserialize_with = "money_vec")]
    pub budgets: Vec<Money>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_prob_model")]
    pub prob_model: EdgeProbabilityModel,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_sims")]
    pub sims: u32,
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub merge: MergeRule,
    /// Coordinate interpretation of file-based datasets.
    #[serde(default)]
    pub coords: CoordMode,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub trace: bool,
}

fn default_prob_model() -> EdgeProbabilityModel {
    EdgeProbabilityModel::Uniform { pc: 0.1 }
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_lambda() -> f64 {
    100.0
}
fn default_sims() -> u32 {
    1000
}
fn default_out() -> PathBuf {
    PathBuf::from("results.csv")
}

/// Accept TOML integers or floats for money lists.
fn money_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Money>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        I(i64),
        F(f64),
    }
    let raw: Vec<Num> = Vec::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|n| match n {
            Num::I(i) => i as f64,
            Num::F(f) => f,
        })
        .collect())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.budgets.is_empty() {
            return Err(HarnessError::Config("budgets must be non-empty".into()));
        }
        if let Some(b) = self.budgets.iter().find(|b| **b < 0.0) {
            return Err(HarnessError::Config(format!("negative budget {b}")));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("algorithms must be non-empty".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(HarnessError::Config(format!(
                "epsilon {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.lambda <= 0.0 {
            return Err(HarnessError::Config(format!(
                "lambda {} must be positive",
                self.lambda
            )));
        }
        if !self.exact && self.sims == 0 {
            return Err(HarnessError::Config("sims must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{e}")))
    }
}

/// One cell of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub budget: Money,
    pub phi_total: f64,
    pub phi_billboard: f64,
    pub phi_social: f64,
    pub phi_interaction: f64,
    pub split_pct_billboard: f64,
    pub split_pct_social: f64,
    pub wall_time_ms: u64,
    pub rng_seed: u64,
}

/// Build the problem instance named by the config, at the first budget.
/// The sweep clones it per budget.
pub fn load_instance(config: &ExperimentConfig) -> Result<ProblemInstance, HarnessError> {
    match &config.instance {
        InstanceSource::Synthetic {
            users,
            billboards,
            edges,
            checkins_per_user,
            extent_m,
            horizon_s,
            delta_slot_s,
            seed_cost_scale,
        } => Ok(data::generate_synthetic(&SyntheticConfig {
            n_users: *users,
            n_billboards: *billboards,
            n_edges: *edges,
            extent_m: *extent_m,
            horizon: TimeInterval {
                start: 0,
                end: *horizon_s,
            },
            delta_slot: *delta_slot_s,
            checkins_per_user: *checkins_per_user,
            lambda: config.lambda,
            budget: config.budgets[0],
            prob_model: config.prob_model,
            seed_cost_scale: *seed_cost_scale,
            rng_seed: config.rng_seed,
        })),
        InstanceSource::Files { dir } => load_instance_dir(dir, config),
    }
}

/// Load `trajectories.csv`, `billboards.csv`, `graph.csv` from a directory
/// and assemble an instance with the config's probability model, slot
/// costs, and seed costs.
pub fn load_instance_dir(
    dir: &Path,
    config: &ExperimentConfig,
) -> Result<ProblemInstance, HarnessError> {
    let trajectories = data::load_trajectories(&dir.join("trajectories.csv"))?;
    let billboards = data::load_billboards(&dir.join("billboards.csv"))?;
    let raw_edges = data::load_graph_edges(&dir.join("graph.csv"))?;

    let explicit = matches!(config.prob_model, EdgeProbabilityModel::Explicit);
    let mut edges = Vec::with_capacity(raw_edges.edges.len());
    let mut nodes: Vec<data::UserId> = trajectories.users();
    for (u, v, p) in raw_edges.edges {
        let p = match (explicit, p) {
            (true, Some(p)) => p,
            (true, None) => {
                return Err(HarnessError::Config(
                    "explicit probability model requires a prob column in graph.csv".into(),
                ))
            }
            // placeholder weight, remapped by the probability model below
            (false, _) => 0.5,
        };
        nodes.push(u);
        nodes.push(v);
        edges.push((u, v, p));
    }
    nodes.sort_unstable();
    nodes.dedup();
    let graph = data::SocialGraph::new(nodes, &edges)
        .map_err(|e| DataError::Validation(e.to_string()))?;
    let mut graph = crate::diffusion::assign_probabilities(&graph, config.prob_model)
        .map_err(|e| DataError::Validation(e.to_string()))?;
    graph
        .assign_seed_costs(data::DEFAULT_SEED_COST_SCALE)
        .map_err(|e| DataError::Validation(e.to_string()))?;

    let horizon = trajectories.horizon();
    let delta = default_delta().min(horizon.length().max(1));
    let mut slots = data::derive_slots(&billboards, delta, horizon)
        .map_err(|e| DataError::Validation(e.to_string()))?;

    // influence-proportional slot costs, per-slot scale from the rng seed
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let matrix = crate::billboard::SlotUserMatrix::build(
        &trajectories,
        &slots,
        config.lambda,
        config.coords,
    );
    let costs: HashMap<SlotId, Money> = slots
        .slots()
        .iter()
        .map(|s| {
            let singleton = crate::billboard::influence(&matrix, &[s.id]);
            let scale = rng.gen_range(0.8..=1.1);
            (s.id, data::slot_cost(scale, singleton).expect("scale in range"))
        })
        .collect();
    slots.set_costs(&costs);

    ProblemInstance::new(
        trajectories,
        slots,
        graph,
        config.budgets[0],
        config.lambda,
        delta,
        config.coords,
        config.rng_seed,
    )
    .map_err(|e| HarnessError::Data(DataError::Validation(e.to_string())))
}

fn mix(a: u64, b: u64) -> u64 {
    let mut x = a ^ b.wrapping_mul(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x ^ (x >> 31)
}

/// Run one algorithm at one budget on a prepared instance.
pub fn run_cell(
    prep: &Prepared<'_>,
    algorithm: Algorithm,
    config: &ExperimentConfig,
    cell_seed: u64,
) -> Result<RunResult, HarnessError> {
    let mode = if config.exact {
        EvalMode::Exact
    } else {
        EvalMode::MonteCarlo {
            sims: config.sims,
            rng_seed: cell_seed,
        }
    };
    Ok(match algorithm {
        Algorithm::RandomizedGreedy => randomized_greedy(prep, config.epsilon, mode, cell_seed)?,
        Algorithm::Tpg => tpg(prep, mode)?,
        Algorithm::Random => baseline_random(prep, mode, cell_seed)?,
        Algorithm::TopK => baseline_top_k(prep, mode)?,
        Algorithm::Hdh => baseline_hdh(prep, mode, config.merge)?,
        Algorithm::Pagerank => baseline_pagerank(prep, mode, 0.85, 100)?,
    })
}

/// Selection traces keyed by (algorithm name, budget).
pub type TraceLog = Vec<(String, Money, GreedyTrace)>;

/// Run the full sweep: one row per (algorithm, budget), deterministic for
/// a fixed seed except the wall-clock column. Cells run concurrently;
/// each derives its own rng stream from (seed, algorithm, budget).
pub fn run_experiment(
    config: &ExperimentConfig,
) -> Result<(Vec<ResultRow>, TraceLog), HarnessError> {
    config.validate()?;
    let base = load_instance(config)?;

    let mut cells: Vec<(Algorithm, Money)> = Vec::new();
    for &algo in &config.algorithms {
        for &budget in &config.budgets {
            cells.push((algo, budget));
        }
    }

    let outcomes: Vec<Result<(ResultRow, GreedyTrace), HarnessError>> =
        exec::map_indexed(cells.len(), |i| {
            let (algo, budget) = cells[i];
            let mut instance = base.clone();
            instance.budget = budget;
            let prep = Prepared::new(&instance);
            let cell_seed = mix(config.rng_seed, mix(algo.name().len() as u64 ^ hash_name(algo), budget.to_bits()));
            let started = Instant::now();
            let run = run_cell(&prep, algo, config, cell_seed)?;
            let wall_time_ms = started.elapsed().as_millis() as u64;
            let spent_b = run.solution.spent_billboard;
            let spent_s = run.solution.spent_social;
            let total = spent_b + spent_s;
            let split_b = if total > 0.0 { spent_b / total } else { 0.0 };
            let split_s = if total > 0.0 { 1.0 - split_b } else { 0.0 };
            let row = ResultRow {
                algorithm: algo.name().to_string(),
                budget,
                phi_total: run.solution.phi.phi,
                phi_billboard: run.solution.phi.billboard,
                phi_social: run.solution.phi.social,
                phi_interaction: run.solution.phi.interaction,
                split_pct_billboard: split_b,
                split_pct_social: split_s,
                wall_time_ms,
                rng_seed: cell_seed,
            };
            Ok((row, run.trace))
        });

    let mut rows = Vec::with_capacity(cells.len());
    let mut traces = Vec::with_capacity(cells.len());
    for (outcome, (algo, budget)) in outcomes.into_iter().zip(&cells) {
        let (row, trace) = outcome?;
        rows.push(row);
        traces.push((algo.name().to_string(), *budget, trace));
    }
    Ok((rows, traces))
}

fn hash_name(algo: Algorithm) -> u64 {
    algo.name()
        .bytes()
        .fold(0xcbf29ce484222325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x100000001b3)
        })
}

/// Write rows as CSV with the canonical header.
pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let io_err = |e: std::io::Error| {
        HarnessError::Data(DataError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(w, "{RESULT_HEADER}").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.budget,
            r.phi_total,
            r.phi_billboard,
            r.phi_social,
            r.phi_interaction,
            r.split_pct_billboard,
            r.split_pct_social,
            r.wall_time_ms,
            r.rng_seed
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Parse a results CSV back into rows.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| {
        HarnessError::Data(DataError::Io {
            path: path.display().to_string(),
            source: e,
        })
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<ResultRow>().enumerate() {
        rows.push(rec.map_err(|e| {
            HarnessError::Data(DataError::Parse {
                path: path.display().to_string(),
                row: i + 1,
                msg: e.to_string(),
            })
        })?);
    }
    Ok(rows)
}

/// The three long-format plot projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    InfluenceVsBudget,
    SplitVsAlgo,
    TimeVsBudget,
}

impl std::str::FromStr for PlotKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "influence_vs_budget" => Ok(PlotKind::InfluenceVsBudget),
            "split_vs_algo" => Ok(PlotKind::SplitVsAlgo),
            "time_vs_budget" => Ok(PlotKind::TimeVsBudget),
            other => Err(format!("unknown plot kind {other:?}")),
        }
    }
}

/// Project rows into `series,x,y` long-format CSV ready for any plotting
/// tool; no rendering happens here.
pub fn emit_plot_data(rows: &[ResultRow], kind: PlotKind) -> Result<String, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::Config("no rows to plot".into()));
    }
    let mut out = String::from("series,x,y\n");
    match kind {
        PlotKind::InfluenceVsBudget => {
            for r in rows {
                out.push_str(&format!("{},{},{}\n", r.algorithm, r.budget, r.phi_total));
            }
        }
        PlotKind::SplitVsAlgo => {
            for r in rows {
                out.push_str(&format!(
                    "{}/billboard,{},{}\n",
                    r.algorithm,
                    r.budget,
                    r.split_pct_billboard * 100.0
                ));
                out.push_str(&format!(
                    "{}/social,{},{}\n",
                    r.algorithm,
                    r.budget,
                    r.split_pct_social * 100.0
                ));
            }
        }
        PlotKind::TimeVsBudget => {
            for r in rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    r.algorithm, r.budget, r.wall_time_ms
                ));
            }
        }
    }
    Ok(out)
}
