//! Sampled ratio greedy over the merged candidate universe.
//!
//! Each round draws a small random sample from each channel's remaining
//! pool, prices every sampled candidate by marginal objective gain per
//! cost against the current selection, and commits the better channel
//! champion when it still fits the budget. Chosen candidates leave their
//! pool whether or not they were affordable, so the loop ends after at
//! most `slots + seeds` rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combined::{EvalMode, Item, PhiEvaluator};
use crate::data::{Money, SlotId, UserId};
use crate::exec;

use super::{
    choose_cross_channel, seed_singleton, slot_singleton, OptimizeError, Prepared, RunResult,
    Scored, SelectionState,
};

/// Run the sampled greedy. `epsilon` controls the per-round sample size
/// `ceil(pool/k * ln(1/epsilon))`; smaller epsilon samples more of the
/// pool, and values near zero recover the full deterministic ratio greedy.
/// `rng_seed` drives only the sampling.
pub fn randomized_greedy(
    prep: &Prepared<'_>,
    epsilon: f64,
    mode: EvalMode,
    rng_seed: u64,
) -> Result<RunResult, OptimizeError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(OptimizeError::BadEpsilon(epsilon));
    }
    let eval = prep.evaluator(mode)?;
    let budget = prep.instance.budget;

    let mut slot_pool = prep.slot_pool();
    let mut seed_pool = prep.seed_pool();

    // Feasible-cardinality probe per channel: walk items in ascending
    // singleton-influence order, spending the whole budget in that channel
    // alone; the smaller of the two counts scales the sample size.
    let slot_costs_by_influence: Vec<Money> = {
        let mut v: Vec<(f64, SlotId, Money)> = slot_pool
            .iter()
            .map(|&(s, c)| (slot_singleton(prep, s), s, c))
            .collect();
        v.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        v.into_iter().map(|(_, _, c)| c).collect()
    };
    let seed_costs_by_influence: Vec<Money> = {
        let mut v: Vec<(f64, UserId, Money)> = seed_pool
            .iter()
            .map(|&(u, c)| Ok((seed_singleton(&eval, u)?, u, c)))
            .collect::<Result<_, OptimizeError>>()?;
        v.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        v.into_iter().map(|(_, _, c)| c).collect()
    };
    let k = packed_count(budget, &slot_costs_by_influence)
        .min(packed_count(budget, &seed_costs_by_influence))
        .max(1);

    let scale = (1.0 / epsilon).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut state = SelectionState::new(budget);

    while state.remaining() > 0.0 && (!slot_pool.is_empty() || !seed_pool.is_empty()) {
        let best_slot = best_of_sample(
            &eval,
            &state,
            &mut rng,
            &slot_pool,
            k,
            scale,
            |&(s, cost)| (Item::Slot(s), cost),
        )?;
        let best_seed = best_of_sample(
            &eval,
            &state,
            &mut rng,
            &seed_pool,
            k,
            scale,
            |&(u, cost)| (Item::Seed(u), cost),
        )?;

        let chosen = match (&best_slot, &best_seed) {
            (Some(b), Some(s)) => *choose_cross_channel(b, s),
            (Some(b), None) => *b,
            (None, Some(s)) => *s,
            (None, None) => break,
        };

        if state.fits(chosen.item, chosen.cost) {
            state.commit(chosen.item, chosen.cost, chosen.gain.gain);
        }
        match chosen.item {
            Item::Slot(s) => slot_pool.retain(|(id, _)| *id != s),
            Item::Seed(u) => seed_pool.retain(|(id, _)| *id != u),
        }
    }

    state.finish(&eval)
}

/// How many items the budget packs in the given order: keep adding while
/// money remains, as the initialization sweep prescribes.
fn packed_count(budget: Money, costs_in_order: &[Money]) -> usize {
    let mut remaining = budget;
    let mut count = 0;
    for cost in costs_in_order {
        if remaining <= 0.0 {
            break;
        }
        count += 1;
        remaining -= cost;
    }
    count
}

/// Sample `ceil(pool/k * scale)` items (clamped to `[1, pool]`) without
/// replacement and return the best by gain per cost.
fn best_of_sample<T, F>(
    eval: &PhiEvaluator<'_>,
    state: &SelectionState,
    rng: &mut ChaCha8Rng,
    pool: &[T],
    k: usize,
    scale: f64,
    as_item: F,
) -> Result<Option<Scored>, OptimizeError>
where
    T: Copy + Sync,
    F: Fn(&T) -> (Item, Money) + Sync,
{
    if pool.is_empty() {
        return Ok(None);
    }
    let want = ((pool.len() as f64 / k as f64) * scale).ceil() as usize;
    let want = want.clamp(1, pool.len());
    // warm the base evaluation so the parallel lanes below hit the memo
    eval.phi(state.slots(), state.seeds())?;
    // partial Fisher-Yates: the first `want` positions become the sample
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in 0..want {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.truncate(want);

    let scored: Vec<Result<Scored, OptimizeError>> = exec::map_indexed(idx.len(), |i| {
        let (item, cost) = as_item(&pool[idx[i]]);
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
    Ok(best)
}
