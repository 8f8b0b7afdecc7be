//! Domain types shared by every other module: users, trajectories,
//! billboards and their rentable slots, the social graph, and the problem
//! instance tying them together under one budget.
//!
//! All types are immutable once constructed and safe to share across
//! worker threads.

mod cost;
mod io;
mod synth;

pub use cost::{seed_cost, slot_cost, CostError, DEFAULT_SEED_COST_SCALE};
pub use io::{
    load_billboards, load_graph_edges, load_trajectories, save_billboards, save_graph,
    save_trajectories, DataError,
};
pub use synth::{generate_synthetic, instance_fingerprint, SyntheticConfig};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Money amounts (costs, budgets) in abstract currency units.
pub type Money = f64;

/// Opaque identifier of a person, shared between the trajectory database
/// and the social graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u64);

/// Opaque identifier of one rentable billboard time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(pub u64);

/// Opaque identifier of a physical billboard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BillboardId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for BillboardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How the 2-D coordinates in a dataset are to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordMode {
    /// WGS-84 decimal degrees; distances via haversine.
    #[default]
    Wgs84,
    /// Planar coordinates in meters; distances via Euclidean norm.
    Planar,
}

/// A point on the map. In [`CoordMode::Wgs84`] `lat`/`lon` are decimal
/// degrees; in [`CoordMode::Planar`] they are y/x meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle or planar distance in meters, depending on `mode`.
pub fn distance_m(a: GeoPoint, b: GeoPoint, mode: CoordMode) -> f64 {
    match mode {
        CoordMode::Planar => (a.lat - b.lat).hypot(a.lon - b.lon),
        CoordMode::Wgs84 => {
            let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
            let dla = (b.lat - a.lat).to_radians();
            let dlo = (b.lon - a.lon).to_radians();
            let h = (dla / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlo / 2.0).sin().powi(2);
            2.0 * EARTH_RADIUS_M * h.sqrt().asin()
        }
    }
}

/// Time span `[start, end]` in integer epoch seconds, `start <= end`.
///
/// Visit records are closed intervals. Slot windows are treated as
/// half-open `[start, end)` so consecutive slots on the same billboard
/// never share an instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: i64,
    pub end: i64,
}

impl TimeInterval {
    pub fn new(start: i64, end: i64) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn length(&self) -> i64 {
        self.end - self.start
    }

    /// Closed-interval containment: `self` within `outer`.
    pub fn within(&self, outer: &TimeInterval) -> bool {
        self.start >= outer.start && self.end <= outer.end
    }

    /// Does the half-open slot window `self` see the closed visit interval?
    pub fn slot_sees_visit(&self, visit: &TimeInterval) -> bool {
        self.start <= visit.end && visit.start < self.end
    }
}

/// One trajectory tuple: `user` was at `location` throughout `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub user: UserId,
    pub location: GeoPoint,
    pub interval: TimeInterval,
}

/// The trajectory database: every record's interval lies inside `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDB {
    records: Vec<TrajectoryRecord>,
    horizon: TimeInterval,
}

impl TrajectoryDB {
    /// Build a database; the horizon is the envelope of the record
    /// intervals (`[0, 0]` when empty).
    pub fn new(records: Vec<TrajectoryRecord>) -> Self {
        let horizon = match (
            records.iter().map(|r| r.interval.start).min(),
            records.iter().map(|r| r.interval.end).max(),
        ) {
            (Some(lo), Some(hi)) => TimeInterval { start: lo, end: hi },
            _ => TimeInterval { start: 0, end: 0 },
        };
        Self { records, horizon }
    }

    /// Build with an explicit horizon. Fails if any record escapes it.
    pub fn with_horizon(
        records: Vec<TrajectoryRecord>,
        horizon: TimeInterval,
    ) -> Result<Self, DataError> {
        if let Some(i) = records.iter().position(|r| !r.interval.within(&horizon)) {
            return Err(DataError::Validation(format!(
                "record {i} escapes horizon [{}, {}]",
                horizon.start, horizon.end
            )));
        }
        Ok(Self { records, horizon })
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn horizon(&self) -> TimeInterval {
        self.horizon
    }

    /// Distinct users appearing in the records, ascending.
    pub fn users(&self) -> Vec<UserId> {
        let mut ids: Vec<UserId> = self.records.iter().map(|r| r.user).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// A physical billboard with its panel area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Billboard {
    pub id: BillboardId,
    pub location: GeoPoint,
    /// Panel area in arbitrary positive units.
    pub panel_size: f64,
}

/// One rentable window on one billboard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BillboardSlot {
    pub id: SlotId,
    /// Index into the owning [`SlotSet`]'s billboard list.
    pub billboard: usize,
    pub interval: TimeInterval,
    pub cost: Money,
}

/// All slots of an instance together with the billboards they live on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotSet {
    billboards: Vec<Billboard>,
    slots: Vec<BillboardSlot>,
}

#[derive(Debug, thiserror::Error)]
pub enum SlotError {
    #[error("slot duration must be positive, got {0}")]
    NonPositiveDelta(i64),
    #[error("horizon end {end} must exceed start {start}")]
    EmptyHorizon { start: i64, end: i64 },
    #[error("duplicate slot id {0}")]
    DuplicateSlot(SlotId),
    #[error("slot {slot} references billboard index {index} out of range")]
    BadBillboardIndex { slot: SlotId, index: usize },
}

impl SlotSet {
    pub fn new(billboards: Vec<Billboard>, slots: Vec<BillboardSlot>) -> Result<Self, SlotError> {
        let mut seen = std::collections::HashSet::new();
        for s in &slots {
            if !seen.insert(s.id) {
                return Err(SlotError::DuplicateSlot(s.id));
            }
            if s.billboard >= billboards.len() {
                return Err(SlotError::BadBillboardIndex {
                    slot: s.id,
                    index: s.billboard,
                });
            }
        }
        Ok(Self { billboards, slots })
    }

    pub fn billboards(&self) -> &[Billboard] {
        &self.billboards
    }

    pub fn slots(&self) -> &[BillboardSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, id: SlotId) -> Option<&BillboardSlot> {
        self.slots.iter().find(|s| s.id == id)
    }

    pub fn billboard_of(&self, slot: &BillboardSlot) -> &Billboard {
        &self.billboards[slot.billboard]
    }

    /// Largest panel area over all billboards (not just selected ones).
    pub fn max_panel_size(&self) -> Option<f64> {
        self.billboards
            .iter()
            .map(|b| b.panel_size)
            .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
    }

    /// Overwrite slot costs; `costs` is keyed by slot id.
    pub fn set_costs(&mut self, costs: &HashMap<SlotId, Money>) {
        for s in &mut self.slots {
            if let Some(c) = costs.get(&s.id) {
                s.cost = *c;
            }
        }
    }
}

/// Cut each billboard's share of the horizon into windows of exactly
/// `delta` seconds. A trailing remainder shorter than `delta` is dropped,
/// so each billboard contributes `floor((T2-T1)/delta)` slots. Slot ids
/// number consecutively from 0 in (billboard, window) order; costs start
/// at 1 until a cost model overwrites them.
pub fn derive_slots(
    billboards: &[Billboard],
    delta: i64,
    horizon: TimeInterval,
) -> Result<SlotSet, SlotError> {
    if delta <= 0 {
        return Err(SlotError::NonPositiveDelta(delta));
    }
    if horizon.end <= horizon.start {
        return Err(SlotError::EmptyHorizon {
            start: horizon.start,
            end: horizon.end,
        });
    }
    let per_board = (horizon.end - horizon.start) / delta;
    let mut slots = Vec::with_capacity(billboards.len() * per_board as usize);
    let mut next_id = 0u64;
    for (bi, _) in billboards.iter().enumerate() {
        for w in 0..per_board {
            let start = horizon.start + w * delta;
            slots.push(BillboardSlot {
                id: SlotId(next_id),
                billboard: bi,
                interval: TimeInterval {
                    start,
                    end: start + delta,
                },
                cost: 1.0,
            });
            next_id += 1;
        }
    }
    SlotSet::new(billboards.to_vec(), slots)
}

/// Directed social graph with per-edge activation probabilities in `(0, 1]`
/// and a selection cost per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    nodes: Vec<UserId>,
    index: HashMap<UserId, usize>,
    /// Out-neighbors `(target index, probability)`, ascending by target.
    out_edges: Vec<Vec<(usize, f64)>>,
    in_degree: Vec<usize>,
    seed_costs: Vec<Money>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node not in the graph")]
    UnknownEndpoint(UserId, UserId),
    #[error("self-loop on node {0}")]
    SelfLoop(UserId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(UserId, UserId),
    #[error("edge ({0}, {1}) probability {2} outside (0, 1]")]
    BadProbability(UserId, UserId, f64),
    #[error("graph has no nodes")]
    Empty,
}

impl SocialGraph {
    /// Build from a node list and `(src, dst, probability)` edges.
    /// Seed costs default to 1 until a cost model assigns them.
    pub fn new(mut nodes: Vec<UserId>, edges: &[(UserId, UserId, f64)]) -> Result<Self, GraphError> {
        nodes.sort_unstable();
        nodes.dedup();
        let index: HashMap<UserId, usize> =
            nodes.iter().enumerate().map(|(i, u)| (*u, i)).collect();
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_degree = vec![0usize; nodes.len()];
        let mut seen = std::collections::HashSet::new();
        for &(u, v, p) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let (ui, vi) = match (index.get(&u), index.get(&v)) {
                (Some(a), Some(b)) => (*a, *b),
                _ => return Err(GraphError::UnknownEndpoint(u, v)),
            };
            if !seen.insert((ui, vi)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(GraphError::BadProbability(u, v, p));
            }
            out_edges[ui].push((vi, p));
            in_degree[vi] += 1;
        }
        for adj in &mut out_edges {
            adj.sort_unstable_by_key(|(t, _)| *t);
        }
        let seed_costs = vec![1.0; nodes.len()];
        Ok(Self {
            nodes,
            index,
            out_edges,
            in_degree,
            seed_costs,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    /// Node ids in ascending order.
    pub fn nodes(&self) -> &[UserId] {
        &self.nodes
    }

    pub fn contains(&self, u: UserId) -> bool {
        self.index.contains_key(&u)
    }

    pub fn node_index(&self, u: UserId) -> Option<usize> {
        self.index.get(&u).copied()
    }

    pub fn node_at(&self, i: usize) -> UserId {
        self.nodes[i]
    }

    /// Out-neighbors of the node at `i`, ascending by target index.
    pub fn out(&self, i: usize) -> &[(usize, f64)] {
        &self.out_edges[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_edges[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_degree[i]
    }

    /// All edges as `(src, dst, probability)` in deterministic order.
    pub fn edges(&self) -> Vec<(UserId, UserId, f64)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (ui, adj) in self.out_edges.iter().enumerate() {
            for &(vi, p) in adj {
                out.push((self.nodes[ui], self.nodes[vi], p));
            }
        }
        out
    }

    /// Replace every edge probability via `f(src_idx, dst_idx)`.
    pub fn remap_probabilities<F: Fn(usize, usize) -> f64>(
        &self,
        f: F,
    ) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (ui, adj) in self.out_edges.iter().enumerate() {
            for &(vi, _) in adj {
                edges.push((self.nodes[ui], self.nodes[vi], f(ui, vi)));
            }
        }
        let mut g = Self::new(self.nodes.clone(), &edges)?;
        g.seed_costs = self.seed_costs.clone();
        Ok(g)
    }

    pub fn seed_cost(&self, u: UserId) -> Option<Money> {
        self.index.get(&u).map(|i| self.seed_costs[*i])
    }

    pub fn seed_cost_at(&self, i: usize) -> Money {
        self.seed_costs[i]
    }

    pub fn set_seed_costs(&mut self, costs: Vec<Money>) {
        assert_eq!(costs.len(), self.nodes.len());
        self.seed_costs = costs;
    }

    /// Assign degree-proportional seed costs with scale `k`.
    pub fn assign_seed_costs(&mut self, k: f64) -> Result<(), CostError> {
        let costs: Result<Vec<Money>, CostError> = self
            .nodes
            .clone()
            .into_iter()
            .map(|u| seed_cost(u, self, k))
            .collect();
        self.seed_costs = costs?;
        Ok(())
    }
}

/// A full problem instance: where people went, what can be rented, who
/// influences whom, and how much money there is.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub trajectories: TrajectoryDB,
    pub slots: SlotSet,
    pub graph: SocialGraph,
    pub budget: Money,
    /// Influence radius in meters.
    pub lambda: f64,
    /// Slot duration in seconds.
    pub delta_slot: i64,
    pub coord_mode: CoordMode,
    pub rng_seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("budget must be non-negative, got {0}")]
    NegativeBudget(Money),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("trajectory user {0} is missing from the social graph")]
    UserOutsideGraph(UserId),
}

impl ProblemInstance {
    /// Validates budget/lambda ranges and that every trajectory user is a
    /// graph node (the two channels must share one user universe).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        trajectories: TrajectoryDB,
        slots: SlotSet,
        graph: SocialGraph,
        budget: Money,
        lambda: f64,
        delta_slot: i64,
        coord_mode: CoordMode,
        rng_seed: u64,
    ) -> Result<Self, InstanceError> {
        if budget.is_nan() || budget < 0.0 {
            return Err(InstanceError::NegativeBudget(budget));
        }
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(InstanceError::NonPositiveLambda(lambda));
        }
        for u in trajectories.users() {
            if !graph.contains(u) {
                return Err(InstanceError::UserOutsideGraph(u));
            }
        }
        Ok(Self {
            trajectories,
            slots,
            graph,
            budget,
            lambda,
            delta_slot,
            coord_mode,
            rng_seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board(id: u64) -> Billboard {
        Billboard {
            id: BillboardId(id),
            location: GeoPoint { lat: 0.0, lon: 0.0 },
            panel_size: 10.0,
        }
    }

    #[test]
    fn derive_slots_single_window() {
        let h = TimeInterval { start: 0, end: 3600 };
        let set = derive_slots(&[board(1)], 3600, h).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.slots()[0].interval, h);
    }

    #[test]
    fn derive_slots_two_boards_four_windows() {
        let h = TimeInterval { start: 0, end: 400 };
        let set = derive_slots(&[board(1), board(2)], 100, h).unwrap();
        assert_eq!(set.len(), 8);
    }

    #[test]
    fn derive_slots_drops_partial_tail() {
        // horizon 10*delta + 3 seconds: the 3-second remainder is dropped
        let h = TimeInterval {
            start: 0,
            end: 10 * 60 + 3,
        };
        let set = derive_slots(&[board(1), board(2), board(3)], 60, h).unwrap();
        assert_eq!(set.len(), 30);
        for s in set.slots() {
            assert_eq!(s.interval.length(), 60);
            assert!(s.interval.end <= h.end);
        }
    }

    #[test]
    fn derive_slots_rejects_bad_params() {
        let h = TimeInterval { start: 0, end: 100 };
        assert!(derive_slots(&[board(1)], 0, h).is_err());
        assert!(derive_slots(&[board(1)], -5, h).is_err());
        assert!(derive_slots(&[board(1)], 10, TimeInterval { start: 5, end: 5 }).is_err());
    }

    #[test]
    fn slots_tile_disjointly_per_billboard() {
        let h = TimeInterval { start: 100, end: 1300 };
        let set = derive_slots(&[board(1), board(2)], 300, h).unwrap();
        for a in set.slots() {
            for b in set.slots() {
                if a.id != b.id && a.billboard == b.billboard {
                    // half-open windows: no shared interior instant
                    assert!(a.interval.end <= b.interval.start || b.interval.end <= a.interval.start);
                }
            }
        }
    }

    #[test]
    fn boundary_visit_matches_next_slot_only() {
        let h = TimeInterval { start: 0, end: 200 };
        let set = derive_slots(&[board(1)], 100, h).unwrap();
        let visit = TimeInterval { start: 100, end: 100 };
        let hits: Vec<_> = set
            .slots()
            .iter()
            .filter(|s| s.interval.slot_sees_visit(&visit))
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].interval.start, 100);
    }

    #[test]
    fn graph_rejects_self_loops_and_bad_probs() {
        let n = vec![UserId(1), UserId(2)];
        assert!(SocialGraph::new(n.clone(), &[(UserId(1), UserId(1), 0.5)]).is_err());
        assert!(SocialGraph::new(n.clone(), &[(UserId(1), UserId(2), 0.0)]).is_err());
        assert!(SocialGraph::new(n.clone(), &[(UserId(1), UserId(2), 1.1)]).is_err());
        assert!(SocialGraph::new(n, &[(UserId(1), UserId(3), 0.5)]).is_err());
    }

    #[test]
    fn graph_degrees() {
        let n = vec![UserId(1), UserId(2), UserId(3)];
        let g = SocialGraph::new(
            n,
            &[
                (UserId(1), UserId(2), 0.5),
                (UserId(1), UserId(3), 0.5),
                (UserId(2), UserId(3), 0.5),
            ],
        )
        .unwrap();
        assert_eq!(g.out_degree(0), 2);
        assert_eq!(g.in_degree(2), 2);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn instance_requires_shared_universe() {
        let db = TrajectoryDB::new(vec![TrajectoryRecord {
            user: UserId(99),
            location: GeoPoint { lat: 0.0, lon: 0.0 },
            interval: TimeInterval { start: 0, end: 10 },
        }]);
        let g = SocialGraph::new(vec![UserId(1)], &[]).unwrap();
        let err = ProblemInstance::new(
            db,
            SlotSet::default(),
            g,
            100.0,
            50.0,
            10,
            CoordMode::Planar,
            7,
        );
        assert!(matches!(err, Err(InstanceError::UserOutsideGraph(UserId(99)))));
    }

    #[test]
    fn haversine_sanity() {
        // ~111 km per degree of latitude at the equator
        let a = GeoPoint { lat: 0.0, lon: 0.0 };
        let b = GeoPoint { lat: 1.0, lon: 0.0 };
        let d = distance_m(a, b, CoordMode::Wgs84);
        assert!((d - 111_194.9).abs() < 100.0, "got {d}");
        let p = GeoPoint { lat: 3.0, lon: 4.0 };
        let q = GeoPoint { lat: 0.0, lon: 0.0 };
        assert_eq!(distance_m(p, q, CoordMode::Planar), 5.0);
    }
}
