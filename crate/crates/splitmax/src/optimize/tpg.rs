//! Two-phase greedy: a balanced initialization that buys the best
//! slot-per-cost and the best seed-per-cost together whenever the budget
//! allows, followed by a lazy gain-per-cost greedy over everything left.
//!
//! The lazy phase keeps candidates in a priority queue keyed by their
//! last-known gain-per-cost. A popped candidate whose key is stale gets
//! its true gain recomputed; if that still tops the next queue head it is
//! committed, otherwise it is pushed back with the fresh key. Candidates
//! that no longer fit the budget are dropped permanently on pop, which
//! guarantees termination.
//!
//! Lazy evaluation is only sound while every queue key upper-bounds its
//! candidate's current gain. Within one channel that is automatic (gains
//! shrink as the same channel grows), but committing a slot can inflate
//! seed gains through the interaction term and vice versa. Each commit
//! therefore refreshes the keys of the opposite channel; with that, the
//! lazy selection sequence provably matches [`eager_greedy`], the
//! recompute-everything twin used to validate the queue logic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::combined::{EvalMode, Item, PhiEvaluator};
use crate::data::Money;
use crate::exec;

use super::{compare, OptimizeError, Prepared, RunResult, Scored, SelectionState};

/// Queue entry: a candidate with its cached gain-per-cost upper bound and
/// the commit count at which that bound was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub item: Item,
    pub cost: Money,
    pub cached_key: f64,
    pub key_version: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cached_key
            .partial_cmp(&other.cached_key)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal))
            .then_with(|| other.item.cmp(&self.item))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Run the two-phase lazy greedy.
pub fn tpg(prep: &Prepared<'_>, mode: EvalMode) -> Result<RunResult, OptimizeError> {
    let eval = prep.evaluator(mode)?;
    let mut state = SelectionState::new(prep.instance.budget);
    let (slot_pool, seed_pool) = phase_one(prep, &eval, &mut state)?;

    // Phase II: prime every remaining candidate with its current gain.
    // Evaluating the base selection once first means the parallel batch
    // below reuses it from the memo instead of recomputing it per lane.
    eval.phi(state.slots(), state.seeds())?;
    let items: Vec<(Item, Money)> = slot_pool
        .into_iter()
        .map(|(s, c)| (Item::Slot(s), c))
        .chain(seed_pool.into_iter().map(|(u, c)| (Item::Seed(u), c)))
        .collect();
    let primed: Vec<Result<Candidate, OptimizeError>> = exec::map_indexed(items.len(), |i| {
        let (item, cost) = items[i];
        let gain = eval.marginal_phi(state.slots(), state.seeds(), item)?;
        Ok(Candidate {
            item,
            cost,
            cached_key: gain.gain / cost,
            key_version: state.commits(),
        })
    });
    let mut queue = BinaryHeap::with_capacity(items.len());
    for c in primed {
        queue.push(c?);
    }

    while state.remaining() > 0.0 {
        let Some(top) = queue.pop() else { break };
        if !state.fits(top.item, top.cost) {
            // budget only shrinks, so this candidate is gone for good
            continue;
        }
        let (ratio, gain) = if top.key_version == state.commits() {
            (top.cached_key, top.cached_key * top.cost)
        } else {
            let g = eval.marginal_phi(state.slots(), state.seeds(), top.item)?;
            (g.gain / top.cost, g.gain)
        };
        let next_key = queue.peek().map(|c| c.cached_key);
        if next_key.is_none_or(|k| ratio >= k) {
            state.commit(top.item, top.cost, gain);
            queue = refresh_opposite_channel(queue, top.item, &eval, &state)?;
        } else {
            queue.push(Candidate {
                cached_key: ratio,
                key_version: state.commits(),
                ..top
            });
        }
    }

    state.finish(&eval)
}

/// Recompute the keys of every queued candidate in the channel opposite to
/// the one just committed; their gains may have grown and a stale key must
/// never underestimate.
fn refresh_opposite_channel(
    queue: BinaryHeap<Candidate>,
    committed: Item,
    eval: &PhiEvaluator<'_>,
    state: &SelectionState,
) -> Result<BinaryHeap<Candidate>, OptimizeError> {
    let entries: Vec<Candidate> = queue.into_vec();
    eval.phi(state.slots(), state.seeds())?;
    let refreshed: Vec<Result<Candidate, OptimizeError>> =
        exec::map_indexed(entries.len(), |i| {
            let c = entries[i];
            let opposite = matches!(
                (committed, c.item),
                (Item::Slot(_), Item::Seed(_)) | (Item::Seed(_), Item::Slot(_))
            );
            if !opposite {
                return Ok(c);
            }
            let g = eval.marginal_phi(state.slots(), state.seeds(), c.item)?;
            Ok(Candidate {
                cached_key: g.gain / c.cost,
                key_version: state.commits(),
                ..c
            })
        });
    let mut heap = BinaryHeap::with_capacity(entries.len());
    for c in refreshed {
        heap.push(c?);
    }
    Ok(heap)
}

/// Eager twin of [`tpg`]: identical balanced initialization, then a greedy
/// loop that reprices every remaining candidate each round and commits the
/// best affordable one. Quadratic, but the reference for the lazy queue.
pub fn eager_greedy(prep: &Prepared<'_>, mode: EvalMode) -> Result<RunResult, OptimizeError> {
    let eval = prep.evaluator(mode)?;
    let mut state = SelectionState::new(prep.instance.budget);
    let (slot_pool, seed_pool) = phase_one(prep, &eval, &mut state)?;
    let mut pool: Vec<(Item, Money)> = slot_pool
        .into_iter()
        .map(|(s, c)| (Item::Slot(s), c))
        .chain(seed_pool.into_iter().map(|(u, c)| (Item::Seed(u), c)))
        .collect();

    while state.remaining() > 0.0 && !pool.is_empty() {
        eval.phi(state.slots(), state.seeds())?;
        let scored: Vec<Result<Scored, OptimizeError>> = exec::map_indexed(pool.len(), |i| {
            let (item, cost) = pool[i];
            let gain = eval.marginal_phi(state.slots(), state.seeds(), item)?;
            Ok(Scored { item, cost, gain })
        });
        let mut best: Option<Scored> = None;
        for s in scored {
            let s = s?;
            if best.as_ref().is_none_or(|b| s.beats(b)) {
                best = Some(s);
            }
        }
        let Some(best) = best else { break };
        if state.fits(best.item, best.cost) {
            state.commit(best.item, best.cost, best.gain.gain);
        }
        pool.retain(|(item, _)| *item != best.item);
    }

    state.finish(&eval)
}

/// Phase I: pick the best singleton-objective-per-cost slot and seed. Buy
/// both if they fit together, otherwise the better one alone (falling back
/// to the other when the better one alone is too expensive). Returns the
/// two pools with any committed items removed.
#[allow(clippy::type_complexity)]
fn phase_one(
    prep: &Prepared<'_>,
    eval: &PhiEvaluator<'_>,
    state: &mut SelectionState,
) -> Result<
    (
        Vec<(crate::data::SlotId, Money)>,
        Vec<(crate::data::UserId, Money)>,
    ),
    OptimizeError,
> {
    let mut slot_pool = prep.slot_pool();
    let mut seed_pool = prep.seed_pool();

    let best_slot = {
        let scored: Vec<Result<Scored, OptimizeError>> =
            exec::map_indexed(slot_pool.len(), |i| {
                let (s, cost) = slot_pool[i];
                let gain = eval.marginal_phi(&[], &[], Item::Slot(s))?;
                Ok(Scored {
                    item: Item::Slot(s),
                    cost,
                    gain,
                })
            });
        pick_best(scored)?
    };
    let best_seed = {
        let scored: Vec<Result<Scored, OptimizeError>> =
            exec::map_indexed(seed_pool.len(), |i| {
                let (u, cost) = seed_pool[i];
                let gain = eval.marginal_phi(&[], &[], Item::Seed(u))?;
                Ok(Scored {
                    item: Item::Seed(u),
                    cost,
                    gain,
                })
            });
        pick_best(scored)?
    };

    let commit = |state: &mut SelectionState, c: &Scored| -> Result<bool, OptimizeError> {
        if !state.fits(c.item, c.cost) {
            return Ok(false);
        }
        let gain = eval.marginal_phi(state.slots(), state.seeds(), c.item)?;
        state.commit(c.item, c.cost, gain.gain);
        Ok(true)
    };

    let mut committed: Vec<Item> = Vec::new();
    match (&best_slot, &best_seed) {
        (Some(b), Some(s)) => {
            if b.cost + s.cost <= state.remaining() {
                commit(state, b)?;
                commit(state, s)?;
                committed.extend([b.item, s.item]);
            } else {
                let (first, second) = if matches!(compare(b, s), Ordering::Less) {
                    (s, b)
                } else {
                    (b, s)
                };
                if commit(state, first)? {
                    committed.push(first.item);
                } else if commit(state, second)? {
                    committed.push(second.item);
                }
            }
        }
        (Some(only), None) | (None, Some(only)) => {
            if commit(state, only)? {
                committed.push(only.item);
            }
        }
        (None, None) => {}
    }

    slot_pool.retain(|(id, _)| !committed.contains(&Item::Slot(*id)));
    seed_pool.retain(|(id, _)| !committed.contains(&Item::Seed(*id)));
    Ok((slot_pool, seed_pool))
}

fn pick_best(
    scored: Vec<Result<Scored, OptimizeError>>,
) -> Result<Option<Scored>, OptimizeError> {
    let mut best: Option<Scored> = None;
    for s in scored {
        let s = s?;
        if best.as_ref().is_none_or(|b| s.beats(b)) {
            best = Some(s);
        }
    }
    Ok(best)
}
