//! Billboard-side influence: spatio-temporal matching of trajectory
//! records against slots, the panel-size probability model, and the
//! noisy-or influence function over slot sets.

use std::collections::HashMap;
use std::io::Write;

use crate::data::{distance_m, CoordMode, SlotId, SlotSet, TrajectoryDB, UserId};

/// Sparse slot–user probability matrix. An entry exists for `(slot, user)`
/// exactly when some record of the user lies within the influence radius
/// of the slot's billboard and overlaps the slot window in time. The entry
/// value is `panel_size(slot) / max panel size over all billboards`,
/// fixed at build time.
#[derive(Debug, Clone)]
pub struct SlotUserMatrix {
    /// Matched users, ascending; indices into this list are "user indices".
    users: Vec<UserId>,
    user_index: HashMap<UserId, usize>,
    /// Every slot id of the instance (the slot universe), ascending.
    slot_ids: Vec<SlotId>,
    /// Per slot: matched `(user index, probability)`, ascending by user.
    by_slot: HashMap<SlotId, Vec<(usize, f64)>>,
}

impl SlotUserMatrix {
    /// Match trajectories against slots. `lambda` is the influence radius
    /// in meters; the distance predicate is a non-strict `<= lambda`.
    pub fn build(db: &TrajectoryDB, slots: &SlotSet, lambda: f64, mode: CoordMode) -> Self {
        assert!(lambda > 0.0, "lambda must be positive");
        let max_panel = slots.max_panel_size().unwrap_or(1.0);
        let mut pairs: HashMap<SlotId, Vec<UserId>> = HashMap::new();
        for slot in slots.slots() {
            let board = slots.billboard_of(slot);
            let mut matched: Vec<UserId> = db
                .records()
                .iter()
                .filter(|r| {
                    slot.interval.slot_sees_visit(&r.interval)
                        && distance_m(r.location, board.location, mode) <= lambda
                })
                .map(|r| r.user)
                .collect();
            matched.sort_unstable();
            matched.dedup();
            if !matched.is_empty() {
                pairs.insert(slot.id, matched);
            }
        }
        let entries: Vec<(SlotId, UserId, f64)> = slots
            .slots()
            .iter()
            .flat_map(|slot| {
                let p = slots.billboard_of(slot).panel_size / max_panel;
                pairs
                    .get(&slot.id)
                    .into_iter()
                    .flatten()
                    .map(move |u| (slot.id, *u, p))
            })
            .collect();
        let slot_ids: Vec<SlotId> = slots.slots().iter().map(|s| s.id).collect();
        Self::from_entries(&slot_ids, &entries)
    }

    /// Assemble a matrix from explicit `(slot, user, probability)` entries.
    /// `slot_universe` lists every slot of the instance, matched or not.
    pub fn from_entries(slot_universe: &[SlotId], entries: &[(SlotId, UserId, f64)]) -> Self {
        let mut users: Vec<UserId> = entries.iter().map(|(_, u, _)| *u).collect();
        users.sort_unstable();
        users.dedup();
        let user_index: HashMap<UserId, usize> =
            users.iter().enumerate().map(|(i, u)| (*u, i)).collect();
        let mut slot_ids = slot_universe.to_vec();
        slot_ids.sort_unstable();
        slot_ids.dedup();
        let mut by_slot: HashMap<SlotId, Vec<(usize, f64)>> = HashMap::new();
        for &(s, u, p) in entries {
            debug_assert!(p > 0.0 && p <= 1.0, "matrix probability outside (0,1]");
            by_slot.entry(s).or_default().push((user_index[&u], p));
        }
        for list in by_slot.values_mut() {
            list.sort_unstable_by_key(|(u, _)| *u);
        }
        Self {
            users,
            user_index,
            slot_ids,
            by_slot,
        }
    }

    /// Matched users, ascending.
    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn user_index(&self, u: UserId) -> Option<usize> {
        self.user_index.get(&u).copied()
    }

    pub fn user_at(&self, i: usize) -> UserId {
        self.users[i]
    }

    /// The slot universe, ascending.
    pub fn slot_ids(&self) -> &[SlotId] {
        &self.slot_ids
    }

    pub fn contains_slot(&self, s: SlotId) -> bool {
        self.slot_ids.binary_search(&s).is_ok()
    }

    /// Matched `(user index, probability)` pairs of a slot; empty when the
    /// slot reaches nobody.
    pub fn entries_of(&self, s: SlotId) -> &[(usize, f64)] {
        self.by_slot.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entry(&self, s: SlotId, u: UserId) -> Option<f64> {
        let ui = self.user_index(u)?;
        self.entries_of(s)
            .iter()
            .find(|(i, _)| *i == ui)
            .map(|(_, p)| *p)
    }

    pub fn entry_count(&self) -> usize {
        self.by_slot.values().map(Vec::len).sum()
    }

    /// Number of distinct users a slot reaches (its impression count).
    pub fn impressions(&self, s: SlotId) -> usize {
        self.entries_of(s).len()
    }

    /// Debug dump as `slot_id,user_id,prob` CSV rows.
    pub fn dump_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "slot_id,user_id,prob")?;
        for &s in &self.slot_ids {
            for &(ui, p) in self.entries_of(s) {
                writeln!(w, "{},{},{}", s.0, self.users[ui].0, p)?;
            }
        }
        Ok(())
    }
}

/// Running per-user survival products for one growing slot set. Inserting
/// slot by slot and reading `influence()` reproduces the noisy-or formula;
/// `gain()` prices a candidate in O(its matched users).
#[derive(Debug, Clone)]
pub struct SurvivalState {
    /// Per matched user: product of (1 - p) over the inserted slots.
    survival: Vec<f64>,
}

impl SurvivalState {
    pub fn new(matrix: &SlotUserMatrix) -> Self {
        Self {
            survival: vec![1.0; matrix.users().len()],
        }
    }

    pub fn insert(&mut self, matrix: &SlotUserMatrix, slot: SlotId) {
        for &(u, p) in matrix.entries_of(slot) {
            self.survival[u] *= 1.0 - p;
        }
    }

    /// Marginal influence of adding `slot` to the current set.
    pub fn gain(&self, matrix: &SlotUserMatrix, slot: SlotId) -> f64 {
        matrix
            .entries_of(slot)
            .iter()
            .fold(0.0, |acc, &(u, p)| acc + self.survival[u] * p)
    }

    /// Current influence value: sum over users of (1 - survival).
    pub fn influence(&self) -> f64 {
        self.survival.iter().fold(0.0, |acc, s| acc + (1.0 - s))
    }

    /// Coverage probability of the user at matrix index `i`.
    pub fn coverage(&self, i: usize) -> f64 {
        1.0 - self.survival[i]
    }
}

/// Influence of a slot set: for each user, one minus the probability that
/// every selected slot misses them, summed over users.
pub fn influence(matrix: &SlotUserMatrix, slots: &[SlotId]) -> f64 {
    let mut state = SurvivalState::new(matrix);
    for &s in slots {
        state.insert(matrix, s);
    }
    state.influence()
}

#[derive(Debug, thiserror::Error)]
pub enum MarginalError {
    #[error("candidate slot {0} already selected")]
    AlreadySelected(SlotId),
}

/// Incremental marginal influence of `candidate` on top of `slots`.
/// Equals `influence(slots + candidate) - influence(slots)`.
pub fn marginal_influence(
    matrix: &SlotUserMatrix,
    slots: &[SlotId],
    candidate: SlotId,
) -> Result<f64, MarginalError> {
    if slots.contains(&candidate) {
        return Err(MarginalError::AlreadySelected(candidate));
    }
    let mut state = SurvivalState::new(matrix);
    for &s in slots {
        state.insert(matrix, s);
    }
    Ok(state.gain(matrix, candidate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        derive_slots, Billboard, BillboardId, GeoPoint, TimeInterval, TrajectoryRecord,
    };
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn board_at(id: u64, lat: f64, lon: f64, size: f64) -> Billboard {
        Billboard {
            id: BillboardId(id),
            location: GeoPoint { lat, lon },
            panel_size: size,
        }
    }

    fn record(user: u64, lat: f64, lon: f64, start: i64, end: i64) -> TrajectoryRecord {
        TrajectoryRecord {
            user: UserId(user),
            location: GeoPoint { lat, lon },
            interval: TimeInterval { start, end },
        }
    }

    #[test]
    fn matching_user_equal_panels_entry_one() {
        let db = TrajectoryDB::new(vec![record(1, 10.0, 0.0, 10, 20)]);
        let slots = derive_slots(
            &[board_at(1, 0.0, 0.0, 40.0)],
            100,
            TimeInterval { start: 0, end: 100 },
        )
        .unwrap();
        let m = SlotUserMatrix::build(&db, &slots, 50.0, CoordMode::Planar);
        assert_eq!(m.entry(SlotId(0), UserId(1)), Some(1.0));
    }

    #[test]
    fn temporal_gate_blocks_nearby_user() {
        let db = TrajectoryDB::new(vec![record(1, 10.0, 0.0, 500, 600)]);
        let slots = derive_slots(
            &[board_at(1, 0.0, 0.0, 40.0)],
            100,
            TimeInterval { start: 0, end: 100 },
        )
        .unwrap();
        let m = SlotUserMatrix::build(&db, &slots, 50.0, CoordMode::Planar);
        assert_eq!(m.entry(SlotId(0), UserId(1)), None);
        assert_eq!(m.entry_count(), 0);
    }

    #[test]
    fn size_ratio_probability() {
        // panels 50 and 100; a match on the small one gets 0.5
        let db = TrajectoryDB::new(vec![record(1, 10.0, 0.0, 10, 20)]);
        let boards = vec![
            board_at(1, 0.0, 0.0, 50.0),
            board_at(2, 100000.0, 100000.0, 100.0),
        ];
        let slots = derive_slots(&boards, 100, TimeInterval { start: 0, end: 100 }).unwrap();
        let m = SlotUserMatrix::build(&db, &slots, 50.0, CoordMode::Planar);
        assert_eq!(m.entry(SlotId(0), UserId(1)), Some(0.5));
    }

    #[test]
    fn distance_boundary_inclusive() {
        let db = TrajectoryDB::new(vec![
            record(1, 50.0, 0.0, 10, 20),
            record(2, 50.000001, 0.0, 10, 20),
        ]);
        let slots = derive_slots(
            &[board_at(1, 0.0, 0.0, 10.0)],
            100,
            TimeInterval { start: 0, end: 100 },
        )
        .unwrap();
        let m = SlotUserMatrix::build(&db, &slots, 50.0, CoordMode::Planar);
        assert!(m.entry(SlotId(0), UserId(1)).is_some());
        assert!(m.entry(SlotId(0), UserId(2)).is_none());
    }

    #[test]
    fn repeat_visits_yield_one_entry() {
        let db = TrajectoryDB::new(vec![
            record(1, 1.0, 0.0, 10, 20),
            record(1, 2.0, 0.0, 30, 40),
        ]);
        let slots = derive_slots(
            &[board_at(1, 0.0, 0.0, 10.0)],
            100,
            TimeInterval { start: 0, end: 100 },
        )
        .unwrap();
        let m = SlotUserMatrix::build(&db, &slots, 50.0, CoordMode::Planar);
        assert_eq!(m.entry_count(), 1);
        assert_eq!(m.entry(SlotId(0), UserId(1)), Some(1.0));
    }

    #[test]
    fn empty_set_has_zero_influence() {
        let m = SlotUserMatrix::from_entries(&[SlotId(0)], &[(SlotId(0), UserId(1), 0.5)]);
        assert_eq!(influence(&m, &[]), 0.0);
    }

    #[test]
    fn noisy_or_hand_values() {
        let m = SlotUserMatrix::from_entries(
            &[SlotId(0), SlotId(1)],
            &[(SlotId(0), UserId(1), 0.5), (SlotId(1), UserId(1), 0.5)],
        );
        assert_eq!(influence(&m, &[SlotId(0)]), 0.5);
        assert!((influence(&m, &[SlotId(0), SlotId(1)]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn marginal_trivials() {
        let m = SlotUserMatrix::from_entries(
            &[SlotId(0), SlotId(1), SlotId(2)],
            &[(SlotId(0), UserId(1), 0.4), (SlotId(1), UserId(1), 0.6)],
        );
        // empty base: equals singleton influence
        assert_eq!(
            marginal_influence(&m, &[], SlotId(0)).unwrap(),
            influence(&m, &[SlotId(0)])
        );
        // slot with no entries gains nothing
        assert_eq!(marginal_influence(&m, &[SlotId(0)], SlotId(2)).unwrap(), 0.0);
        // duplicate candidate rejected
        assert!(marginal_influence(&m, &[SlotId(0)], SlotId(0)).is_err());
    }

    fn random_matrix(rng: &mut StdRng, n_slots: u64, n_users: u64) -> SlotUserMatrix {
        let universe: Vec<SlotId> = (0..n_slots).map(SlotId).collect();
        let mut entries = Vec::new();
        for s in 0..n_slots {
            for u in 0..n_users {
                if rng.gen_bool(0.6) {
                    entries.push((SlotId(s), UserId(u), rng.gen_range(0.05..=1.0)));
                }
            }
        }
        SlotUserMatrix::from_entries(&universe, &entries)
    }

    /// Direct per-user product recomputation, independently of SurvivalState.
    fn naive_influence(m: &SlotUserMatrix, slots: &[SlotId]) -> f64 {
        m.users()
            .iter()
            .map(|&u| {
                let mut surv = 1.0;
                for &s in slots {
                    if let Some(p) = m.entry(s, u) {
                        surv *= 1.0 - p;
                    }
                }
                1.0 - surv
            })
            .sum()
    }

    #[test]
    fn marginal_matches_direct_recomputation() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 6, 4);
            let base: Vec<SlotId> = (0..6)
                .filter(|_| rng.gen_bool(0.5))
                .map(SlotId)
                .collect();
            for c in 0..6 {
                let c = SlotId(c);
                if base.contains(&c) {
                    continue;
                }
                let inc = marginal_influence(&m, &base, c).unwrap();
                let with: Vec<SlotId> = base.iter().copied().chain([c]).collect();
                let direct = naive_influence(&m, &with) - naive_influence(&m, &base);
                assert!((inc - direct).abs() < 1e-12, "inc={inc} direct={direct}");
            }
        }
    }

    #[test]
    fn monotone_and_bounded_by_universe() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 8, 5);
            let all: Vec<SlotId> = (0..8).map(SlotId).collect();
            for mask in 0u32..256 {
                let s: Vec<SlotId> = all
                    .iter()
                    .filter(|x| mask >> x.0 & 1 == 1)
                    .copied()
                    .collect();
                let base = influence(&m, &s);
                assert!(base >= 0.0);
                assert!(base <= m.users().len() as f64 + 1e-12);
                for &b in &all {
                    if !s.contains(&b) {
                        let with: Vec<SlotId> = s.iter().copied().chain([b]).collect();
                        assert!(influence(&m, &with) >= base - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn submodular_on_enumerated_chains() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..10 {
            let m = random_matrix(&mut rng, 5, 4);
            let all: Vec<SlotId> = (0..5).map(SlotId).collect();
            for sup in 0u32..32 {
                for sub in 0u32..32 {
                    if sub & sup != sub {
                        continue;
                    }
                    let small: Vec<SlotId> =
                        all.iter().filter(|x| sub >> x.0 & 1 == 1).copied().collect();
                    let large: Vec<SlotId> =
                        all.iter().filter(|x| sup >> x.0 & 1 == 1).copied().collect();
                    for &b in &all {
                        if sup >> b.0 & 1 == 1 {
                            continue;
                        }
                        let g_small = marginal_influence(&m, &small, b).unwrap();
                        let g_large = marginal_influence(&m, &large, b).unwrap();
                        assert!(g_small >= g_large - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn dump_csv_format() {
        let m = SlotUserMatrix::from_entries(&[SlotId(3)], &[(SlotId(3), UserId(9), 0.25)]);
        let mut buf = Vec::new();
        m.dump_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slot_id,user_id,prob\n3,9,0.25\n"
        );
    }
}
