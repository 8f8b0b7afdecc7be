//! Desk-scale synthetic instances: uniform user homes and billboards on a
//! planar extent, jittered check-ins, a directed Erdős–Rényi graph, and
//! influence/degree-proportional costs. Pure function of the
//! configuration, including the rng seed.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{
    derive_slots, Billboard, BillboardId, CoordMode, GeoPoint, Money, ProblemInstance, SlotId,
    SocialGraph, TimeInterval, TrajectoryDB, TrajectoryRecord, UserId,
};
use crate::billboard::SlotUserMatrix;
use crate::diffusion::{assign_probabilities, EdgeProbabilityModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_billboards: usize,
    pub n_edges: usize,
    /// Side length of the square planar extent, meters.
    pub extent_m: f64,
    pub horizon: TimeInterval,
    /// Slot duration, seconds.
    pub delta_slot: i64,
    pub checkins_per_user: usize,
    /// Influence radius, meters.
    pub lambda: f64,
    pub budget: Money,
    pub prob_model: EdgeProbabilityModel,
    /// Scale `k` of the degree-proportional seed cost model.
    pub seed_cost_scale: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_users: 20,
            n_billboards: 4,
            n_edges: 40,
            extent_m: 1000.0,
            horizon: TimeInterval { start: 0, end: 86_400 },
            delta_slot: 21_600,
            checkins_per_user: 3,
            lambda: 100.0,
            budget: 1000.0,
            prob_model: EdgeProbabilityModel::Uniform { pc: 0.1 },
            seed_cost_scale: super::DEFAULT_SEED_COST_SCALE,
            rng_seed: 0,
        }
    }
}

/// Generate a complete instance. Users and graph nodes share one universe;
/// slot costs follow the influence-proportional model with a per-slot
/// scale drawn uniformly from [0.8, 1.1]; seed costs follow the
/// degree-proportional model.
pub fn generate_synthetic(config: &SyntheticConfig) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let ext = config.extent_m;

    let homes: Vec<GeoPoint> = (0..config.n_users)
        .map(|_| GeoPoint {
            lat: rng.gen_range(0.0..ext),
            lon: rng.gen_range(0.0..ext),
        })
        .collect();

    let billboards: Vec<Billboard> = (0..config.n_billboards)
        .map(|i| Billboard {
            id: BillboardId(i as u64),
            location: GeoPoint {
                lat: rng.gen_range(0.0..ext),
                lon: rng.gen_range(0.0..ext),
            },
            panel_size: rng.gen_range(20.0..100.0),
        })
        .collect();

    let span = config.horizon.length();
    let mut records = Vec::with_capacity(config.n_users * config.checkins_per_user);
    for (u, home) in homes.iter().enumerate() {
        for _ in 0..config.checkins_per_user {
            let jitter = config.lambda * 2.0;
            let loc = GeoPoint {
                lat: (home.lat + rng.gen_range(-jitter..=jitter)).clamp(0.0, ext),
                lon: (home.lon + rng.gen_range(-jitter..=jitter)).clamp(0.0, ext),
            };
            let len = rng.gen_range(0..=span / 4);
            let start = config.horizon.start + rng.gen_range(0..=(span - len).max(1));
            records.push(TrajectoryRecord {
                user: UserId(u as u64),
                location: loc,
                interval: TimeInterval {
                    start,
                    end: (start + len).min(config.horizon.end),
                },
            });
        }
    }
    let trajectories = TrajectoryDB::with_horizon(records, config.horizon)
        .expect("synthetic records stay inside the horizon");

    // directed Erdős–Rényi with a fixed edge count, no self-loops
    let nodes: Vec<UserId> = (0..config.n_users as u64).map(UserId).collect();
    let max_edges = config.n_users.saturating_mul(config.n_users.saturating_sub(1));
    let target = config.n_edges.min(max_edges);
    let mut chosen = std::collections::HashSet::new();
    while chosen.len() < target {
        let u = rng.gen_range(0..config.n_users) as u64;
        let v = rng.gen_range(0..config.n_users) as u64;
        if u != v {
            chosen.insert((u, v));
        }
    }
    let mut edge_list: Vec<(u64, u64)> = chosen.into_iter().collect();
    edge_list.sort_unstable();
    let edges: Vec<(UserId, UserId, f64)> = edge_list
        .into_iter()
        .map(|(u, v)| (UserId(u), UserId(v), 0.5))
        .collect();
    let graph = SocialGraph::new(nodes, &edges).expect("synthetic edges are valid");
    let mut graph = assign_probabilities(&graph, config.prob_model)
        .expect("probability model valid for synthetic graph");
    graph
        .assign_seed_costs(config.seed_cost_scale)
        .expect("non-empty graph");

    let mut slots = derive_slots(&billboards, config.delta_slot, config.horizon)
        .expect("positive delta and non-empty horizon");
    let matrix = SlotUserMatrix::build(&trajectories, &slots, config.lambda, CoordMode::Planar);
    let costs: HashMap<SlotId, Money> = slots
        .slots()
        .iter()
        .map(|s| {
            let singleton = crate::billboard::influence(&matrix, &[s.id]);
            let delta_scale = rng.gen_range(0.8..=1.1);
            let cost = super::slot_cost(delta_scale, singleton).expect("scale in range");
            (s.id, cost)
        })
        .collect();
    slots.set_costs(&costs);

    ProblemInstance::new(
        trajectories,
        slots,
        graph,
        config.budget,
        config.lambda,
        config.delta_slot,
        CoordMode::Planar,
        config.rng_seed,
    )
    .expect("synthetic instance is internally consistent")
}

/// Stable content digest of an instance, for golden-fixture pinning.
pub fn instance_fingerprint(instance: &ProblemInstance) -> String {
    let mut h = Sha256::new();
    for r in instance.trajectories.records() {
        h.update(
            format!(
                "t,{},{},{},{},{}\n",
                r.user.0, r.location.lat, r.location.lon, r.interval.start, r.interval.end
            )
            .as_bytes(),
        );
    }
    for b in instance.slots.billboards() {
        h.update(
            format!(
                "b,{},{},{},{}\n",
                b.id.0, b.location.lat, b.location.lon, b.panel_size
            )
            .as_bytes(),
        );
    }
    for s in instance.slots.slots() {
        h.update(
            format!(
                "s,{},{},{},{},{}\n",
                s.id.0, s.billboard, s.interval.start, s.interval.end, s.cost
            )
            .as_bytes(),
        );
    }
    for (u, v, p) in instance.graph.edges() {
        h.update(format!("e,{},{},{}\n", u.0, v.0, p).as_bytes());
    }
    for &u in instance.graph.nodes() {
        h.update(format!("c,{},{}\n", u.0, instance.graph.seed_cost(u).unwrap()).as_bytes());
    }
    h.update(format!("m,{},{},{}\n", instance.budget, instance.lambda, instance.rng_seed).as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
