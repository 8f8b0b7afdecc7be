//! Independent Cascade diffusion on the social graph: edge-probability
//! assignment, Monte Carlo spread estimation, an exact live-edge oracle
//! for small graphs, and per-seed activation probabilities.
//!
//! Randomness is common-random-number friendly: one base seed, one
//! counter-derived ChaCha stream per simulation, so estimates for
//! different seed sets share randomness and comparisons are
//! variance-reduced. Results never depend on thread scheduling.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{GraphError, SocialGraph, UserId};
use crate::exec;

/// Largest edge count the exact live-edge oracle will enumerate.
pub const EXACT_EDGE_LIMIT: usize = 20;

/// Simulations per parallel task. Cascades on sparse graphs cost well
/// under a microsecond each, so small batches are not worth waking the
/// thread pool for.
const SIM_CHUNK: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum DiffusionError {
    #[error("seed {0} not in graph")]
    SeedNotInGraph(UserId),
    #[error("simulation count must be at least 1")]
    ZeroSimulations,
    #[error("graph has {edges} edges; exact oracle enumerates at most {limit}")]
    TooLargeForExact { edges: usize, limit: usize },
    #[error("uniform probability {0} outside (0, 1]")]
    BadUniformProbability(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The three edge-probability assignment schemes plus pass-through for
/// datasets that already carry probabilities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum EdgeProbabilityModel {
    /// Every edge gets the same probability `pc`.
    Uniform { pc: f64 },
    /// Edge into `v` gets `1 / in_degree(v)`. With `literal_out` the edge
    /// out of `u` gets `1 / out_degree(u)` instead.
    WeightedCascade { literal_out: bool },
    /// Each edge drawn i.i.d. from {0.1, 0.01, 0.001}.
    Trivalency { rng_seed: u64 },
    /// Keep the probabilities the graph already has.
    Explicit,
}

/// Re-weight every edge of `graph` according to `model`.
pub fn assign_probabilities(
    graph: &SocialGraph,
    model: EdgeProbabilityModel,
) -> Result<SocialGraph, DiffusionError> {
    match model {
        EdgeProbabilityModel::Explicit => Ok(graph.clone()),
        EdgeProbabilityModel::Uniform { pc } => {
            if !(pc > 0.0 && pc <= 1.0) {
                return Err(DiffusionError::BadUniformProbability(pc));
            }
            Ok(graph.remap_probabilities(|_, _| pc)?)
        }
        EdgeProbabilityModel::WeightedCascade { literal_out } => {
            Ok(graph.remap_probabilities(|u, v| {
                let d = if literal_out {
                    graph.out_degree(u)
                } else {
                    graph.in_degree(v)
                };
                // endpoint of an existing edge, so d >= 1
                1.0 / d as f64
            })?)
        }
        EdgeProbabilityModel::Trivalency { rng_seed } => {
            const LEVELS: [f64; 3] = [0.1, 0.01, 0.001];
            // one deterministic draw per edge in (src, dst) order
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut assigned: HashMap<(usize, usize), f64> = HashMap::new();
            for ui in 0..graph.node_count() {
                for &(vi, _) in graph.out(ui) {
                    assigned.insert((ui, vi), LEVELS[rng.gen_range(0..3)]);
                }
            }
            Ok(graph.remap_probabilities(|u, v| assigned[&(u, v)])?)
        }
    }
}

/// One IC cascade from `seeds`; returns the final activated set.
///
/// Breadth-first over the frontier, neighbors tried in ascending node id;
/// with a fixed rng state the outcome is fully deterministic. Each edge
/// gets at most one activation attempt.
pub fn simulate_once<R: Rng>(
    graph: &SocialGraph,
    seeds: &[UserId],
    rng: &mut R,
) -> Result<Vec<UserId>, DiffusionError> {
    let mut seed_idx = Vec::with_capacity(seeds.len());
    for &s in seeds {
        seed_idx.push(
            graph
                .node_index(s)
                .ok_or(DiffusionError::SeedNotInGraph(s))?,
        );
    }
    seed_idx.sort_unstable();
    seed_idx.dedup();
    let active = simulate_indices(graph, &seed_idx, rng);
    Ok(active.into_iter().map(|i| graph.node_at(i)).collect())
}

/// Cascade over node indices; `seeds` must be valid, sorted indices.
fn simulate_indices<R: Rng>(graph: &SocialGraph, seeds: &[usize], rng: &mut R) -> Vec<usize> {
    let mut active = vec![false; graph.node_count()];
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(seeds.len());
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            queue.push_back(s);
        }
    }
    let mut out = seeds.to_vec();
    while let Some(u) = queue.pop_front() {
        for &(v, p) in graph.out(u) {
            if !active[v] && rng.gen::<f64>() < p {
                active[v] = true;
                queue.push_back(v);
                out.push(v);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Monte Carlo estimate of expected spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub simulations: u32,
}

impl SpreadEstimate {
    pub const ZERO: SpreadEstimate = SpreadEstimate {
        mean: 0.0,
        std_error: 0.0,
        simulations: 0,
    };
}

fn sim_rng(rng_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(stream);
    rng
}

/// Mean activated count over `sims` independent cascades from `seeds`.
/// The empty seed set short-circuits to exactly zero. Simulation `i` uses
/// ChaCha stream `i` of `rng_seed` regardless of the seed set, so
/// estimates for different sets share randomness.
pub fn estimate_spread(
    graph: &SocialGraph,
    seeds: &[UserId],
    sims: u32,
    rng_seed: u64,
) -> Result<SpreadEstimate, DiffusionError> {
    if sims == 0 {
        return Err(DiffusionError::ZeroSimulations);
    }
    if seeds.is_empty() {
        return Ok(SpreadEstimate::ZERO);
    }
    let mut seed_idx = Vec::with_capacity(seeds.len());
    for &s in seeds {
        seed_idx.push(
            graph
                .node_index(s)
                .ok_or(DiffusionError::SeedNotInGraph(s))?,
        );
    }
    seed_idx.sort_unstable();
    seed_idx.dedup();

    let total = sims as usize;
    let chunked: Vec<Vec<u32>> = exec::map_tasks(total.div_ceil(SIM_CHUNK), |c| {
        (c * SIM_CHUNK..((c + 1) * SIM_CHUNK).min(total))
            .map(|i| {
                let mut rng = sim_rng(rng_seed, i as u64);
                simulate_indices(graph, &seed_idx, &mut rng).len() as u32
            })
            .collect()
    });
    let counts: Vec<u32> = chunked.concat();
    let n = sims as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let std_error = if sims > 1 {
        let var = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SpreadEstimate {
        mean,
        std_error,
        simulations: sims,
    })
}

/// Exact expected spread by enumerating all `2^|E|` live-edge worlds.
/// Only valid up to [`EXACT_EDGE_LIMIT`] edges.
pub fn exact_spread(graph: &SocialGraph, seeds: &[UserId]) -> Result<f64, DiffusionError> {
    let edges = graph.edge_count();
    if edges > EXACT_EDGE_LIMIT {
        return Err(DiffusionError::TooLargeForExact {
            edges,
            limit: EXACT_EDGE_LIMIT,
        });
    }
    if seeds.is_empty() {
        return Ok(0.0);
    }
    let mut seed_idx = Vec::with_capacity(seeds.len());
    for &s in seeds {
        seed_idx.push(
            graph
                .node_index(s)
                .ok_or(DiffusionError::SeedNotInGraph(s))?,
        );
    }
    seed_idx.sort_unstable();
    seed_idx.dedup();
    let worlds = LiveEdgeWorlds::new(graph);
    Ok(exec::sum_indexed(1usize << edges, |w| {
        let (weight, reached) = worlds.evaluate(w as u32, &seed_idx);
        weight * reached as f64
    }))
}

/// Flattened edge list plus world evaluation for live-edge enumeration.
struct LiveEdgeWorlds<'g> {
    graph: &'g SocialGraph,
    /// `(src, dst, probability)` in deterministic order.
    edges: Vec<(usize, usize, f64)>,
}

impl<'g> LiveEdgeWorlds<'g> {
    fn new(graph: &'g SocialGraph) -> Self {
        let mut edges = Vec::with_capacity(graph.edge_count());
        for u in 0..graph.node_count() {
            for &(v, p) in graph.out(u) {
                edges.push((u, v, p));
            }
        }
        Self { graph, edges }
    }

    /// Probability weight of world `mask` and the node count reachable
    /// from `seeds` through its live edges.
    fn evaluate(&self, mask: u32, seeds: &[usize]) -> (f64, usize) {
        let mut weight = 1.0;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.graph.node_count()];
        for (ei, &(u, v, p)) in self.edges.iter().enumerate() {
            if mask >> ei & 1 == 1 {
                weight *= p;
                adj[u].push(v);
            } else {
                weight *= 1.0 - p;
            }
        }
        let mut seen = vec![false; self.graph.node_count()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        let mut count = 0usize;
        while let Some(u) = stack.pop() {
            count += 1;
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (weight, count)
    }
}

/// Per-user activation probabilities from a single seed: the fraction of
/// `sims` cascades from `{seed}` in which each user ends up active.
/// `Pr(seed, seed) = 1` by construction; absent users are 0.
pub fn activation_probability(
    graph: &SocialGraph,
    seed: UserId,
    sims: u32,
    rng_seed: u64,
) -> Result<HashMap<UserId, f64>, DiffusionError> {
    if sims == 0 {
        return Err(DiffusionError::ZeroSimulations);
    }
    let si = graph
        .node_index(seed)
        .ok_or(DiffusionError::SeedNotInGraph(seed))?;
    // per-seed stream family, decorrelated from the joint-spread streams
    let base = splitmix(rng_seed ^ splitmix(seed.0));
    let total = sims as usize;
    let chunk_totals: Vec<Vec<u32>> = exec::map_tasks(total.div_ceil(SIM_CHUNK), |c| {
        let mut counts = vec![0u32; graph.node_count()];
        for i in c * SIM_CHUNK..((c + 1) * SIM_CHUNK).min(total) {
            let mut rng = sim_rng(base, i as u64);
            for idx in simulate_indices(graph, &[si], &mut rng) {
                counts[idx] += 1;
            }
        }
        counts
    });
    let mut totals = vec![0u64; graph.node_count()];
    for v in &chunk_totals {
        for (t, c) in totals.iter_mut().zip(v) {
            *t += *c as u64;
        }
    }
    Ok(totals
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > 0)
        .map(|(i, t)| (graph.node_at(i), *t as f64 / sims as f64))
        .collect())
}

/// Exact per-user activation probabilities from a single seed, by
/// live-edge enumeration. Same size limit as [`exact_spread`].
pub fn exact_activation(
    graph: &SocialGraph,
    seed: UserId,
) -> Result<HashMap<UserId, f64>, DiffusionError> {
    let edges = graph.edge_count();
    if edges > EXACT_EDGE_LIMIT {
        return Err(DiffusionError::TooLargeForExact {
            edges,
            limit: EXACT_EDGE_LIMIT,
        });
    }
    let si = graph
        .node_index(seed)
        .ok_or(DiffusionError::SeedNotInGraph(seed))?;
    let worlds = LiveEdgeWorlds::new(graph);
    let n = graph.node_count();
    let probs: Vec<f64> = (0..n)
        .map(|target| {
            exec::sum_indexed(1usize << edges, |w| {
                let (weight, hit) = worlds.reaches(w as u32, si, target);
                if hit {
                    weight
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(probs
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .map(|(i, p)| (graph.node_at(i), p.min(1.0)))
        .collect())
}

impl LiveEdgeWorlds<'_> {
    fn reaches(&self, mask: u32, from: usize, target: usize) -> (f64, bool) {
        let mut weight = 1.0;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.graph.node_count()];
        for (ei, &(u, v, p)) in self.edges.iter().enumerate() {
            if mask >> ei & 1 == 1 {
                weight *= p;
                adj[u].push(v);
            } else {
                weight *= 1.0 - p;
            }
        }
        let mut seen = vec![false; self.graph.node_count()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            if u == target {
                return (weight, true);
            }
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (weight, false)
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Activation-probability cache keyed by `(seed, sims, rng_seed)`; `sims = 0`
/// keys the exact entries. Least-recently-used entries are evicted once
/// `capacity` distinct keys are held.
pub struct ActivationCache {
    capacity: usize,
    inner: Mutex<CacheInner>,
}

struct CacheInner {
    map: HashMap<(UserId, u32, u64), Arc<HashMap<UserId, f64>>>,
    order: VecDeque<(UserId, u32, u64)>,
}

impl ActivationCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            inner: Mutex::new(CacheInner {
                map: HashMap::new(),
                order: VecDeque::new(),
            }),
        }
    }

    /// Monte Carlo activation map for `seed`, computed at most once per key.
    pub fn monte_carlo(
        &self,
        graph: &SocialGraph,
        seed: UserId,
        sims: u32,
        rng_seed: u64,
    ) -> Result<Arc<HashMap<UserId, f64>>, DiffusionError> {
        debug_assert!(sims > 0);
        self.get_or_insert((seed, sims, rng_seed), || {
            activation_probability(graph, seed, sims, rng_seed)
        })
    }

    /// Exact activation map for `seed`.
    pub fn exact(
        &self,
        graph: &SocialGraph,
        seed: UserId,
    ) -> Result<Arc<HashMap<UserId, f64>>, DiffusionError> {
        self.get_or_insert((seed, 0, 0), || exact_activation(graph, seed))
    }

    fn get_or_insert<F>(
        &self,
        key: (UserId, u32, u64),
        compute: F,
    ) -> Result<Arc<HashMap<UserId, f64>>, DiffusionError>
    where
        F: FnOnce() -> Result<HashMap<UserId, f64>, DiffusionError>,
    {
        {
            let mut inner = self.inner.lock().unwrap();
            if let Some(hit) = inner.map.get(&key).cloned() {
                if let Some(pos) = inner.order.iter().position(|k| *k == key) {
                    inner.order.remove(pos);
                    inner.order.push_back(key);
                }
                return Ok(hit);
            }
        }
        // compute outside the lock; a racing duplicate insert is harmless
        // because the value is a pure function of the key
        let value = Arc::new(compute()?);
        let mut inner = self.inner.lock().unwrap();
        if let std::collections::hash_map::Entry::Vacant(slot) = inner.map.entry(key) {
            slot.insert(value.clone());
            inner.order.push_back(key);
            while inner.order.len() > self.capacity {
                if let Some(old) = inner.order.pop_front() {
                    inner.map.remove(&old);
                }
            }
        }
        Ok(inner.map.get(&key).cloned().unwrap_or(value))
    }
}
