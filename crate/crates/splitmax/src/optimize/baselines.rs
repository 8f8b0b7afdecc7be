//! The four ranking baselines: uniform random selection, top-k by
//! singleton influence, the high-degree heuristic, and PageRank-ranked
//! seeds. None of them look at marginal gains; they commit affordable
//! items in their ranking order until the money runs out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combined::{EvalMode, Item, PhiEvaluator};
use crate::data::Money;

use super::{
    pagerank_scores, seed_singleton, slot_singleton, OptimizeError, Prepared, RunResult,
    SelectionState,
};

/// How the two per-channel rankings are merged into one order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeRule {
    /// Normalize each channel's ranks into [0, 1] and sort the union.
    #[default]
    Rank,
    /// Alternate between the channels' ranked lists, slots first.
    Alternate,
}

/// Uniform random allocation: repeatedly pick one item uniformly from
/// whatever is still affordable, until nothing is.
pub fn baseline_random(
    prep: &Prepared<'_>,
    mode: EvalMode,
    rng_seed: u64,
) -> Result<RunResult, OptimizeError> {
    let eval = prep.evaluator(mode)?;
    let mut pool: Vec<(Item, Money)> = prep
        .slot_pool()
        .into_iter()
        .map(|(s, c)| (Item::Slot(s), c))
        .chain(
            prep.seed_pool()
                .into_iter()
                .map(|(u, c)| (Item::Seed(u), c)),
        )
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut state = SelectionState::new(prep.instance.budget);
    loop {
        let affordable: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|(_, (item, cost))| state.fits(*item, *cost))
            .map(|(i, _)| i)
            .collect();
        if affordable.is_empty() {
            break;
        }
        let (item, cost) = pool[affordable[rng.gen_range(0..affordable.len())]];
        let gain = eval.marginal_phi(state.slots(), state.seeds(), item)?;
        state.commit(item, cost, gain.gain);
        pool.retain(|(i, _)| *i != item);
    }
    state.finish(&eval)
}

/// Top-k allocation: rank the merged pool by descending channel-native
/// singleton influence and commit whatever is affordable in that order.
pub fn baseline_top_k(prep: &Prepared<'_>, mode: EvalMode) -> Result<RunResult, OptimizeError> {
    let eval = prep.evaluator(mode)?;
    let mut ranked: Vec<(f64, Item, Money)> = Vec::new();
    for (s, cost) in prep.slot_pool() {
        ranked.push((slot_singleton(prep, s), Item::Slot(s), cost));
    }
    for (u, cost) in prep.seed_pool() {
        ranked.push((seed_singleton(&eval, u)?, Item::Seed(u), cost));
    }
    sort_ranked(&mut ranked);
    commit_in_order(&eval, prep.instance.budget, &ranked)
}

/// High-degree heuristic: slots ranked by impression count, seeds by
/// out-degree, merged per `merge`.
pub fn baseline_hdh(
    prep: &Prepared<'_>,
    mode: EvalMode,
    merge: MergeRule,
) -> Result<RunResult, OptimizeError> {
    let eval = prep.evaluator(mode)?;
    let mut slots: Vec<(f64, Item, Money)> = prep
        .slot_pool()
        .into_iter()
        .map(|(s, c)| (prep.matrix.impressions(s) as f64, Item::Slot(s), c))
        .collect();
    let mut seeds: Vec<(f64, Item, Money)> = prep
        .seed_pool()
        .into_iter()
        .map(|(u, c)| {
            let idx = prep.instance.graph.node_index(u).expect("node in graph");
            (prep.instance.graph.out_degree(idx) as f64, Item::Seed(u), c)
        })
        .collect();
    let ranked = merge_channels(&mut slots, &mut seeds, merge);
    commit_in_order(&eval, prep.instance.budget, &ranked)
}

/// PageRank-based selection: seeds ranked by PageRank score, slots by
/// singleton influence, rank-normalized merge.
pub fn baseline_pagerank(
    prep: &Prepared<'_>,
    mode: EvalMode,
    damping: f64,
    max_iter: usize,
) -> Result<RunResult, OptimizeError> {
    let eval = prep.evaluator(mode)?;
    let scores = pagerank_scores(&prep.instance.graph, damping, max_iter, 1e-8)?;
    let mut slots: Vec<(f64, Item, Money)> = prep
        .slot_pool()
        .into_iter()
        .map(|(s, c)| (slot_singleton(prep, s), Item::Slot(s), c))
        .collect();
    let mut seeds: Vec<(f64, Item, Money)> = prep
        .seed_pool()
        .into_iter()
        .map(|(u, c)| {
            let idx = prep.instance.graph.node_index(u).expect("node in graph");
            (scores[idx], Item::Seed(u), c)
        })
        .collect();
    let ranked = merge_channels(&mut slots, &mut seeds, MergeRule::Rank);
    commit_in_order(&eval, prep.instance.budget, &ranked)
}

/// Descending score, ties toward the cheaper item then lower id.
fn sort_ranked(ranked: &mut [(f64, Item, Money)]) {
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.1.cmp(&b.1))
    });
}

/// Scores from different channels are not comparable (impression counts vs
/// degrees, say), so replace each with its within-channel rank normalized
/// into [0, 1] before sorting the union. `Alternate` interleaves instead.
fn merge_channels(
    slots: &mut Vec<(f64, Item, Money)>,
    seeds: &mut Vec<(f64, Item, Money)>,
    merge: MergeRule,
) -> Vec<(f64, Item, Money)> {
    sort_ranked(slots);
    sort_ranked(seeds);
    match merge {
        MergeRule::Rank => {
            let normalize = |v: &mut Vec<(f64, Item, Money)>| {
                let n = v.len();
                for (i, entry) in v.iter_mut().enumerate() {
                    entry.0 = if n <= 1 {
                        1.0
                    } else {
                        1.0 - i as f64 / (n - 1) as f64
                    };
                }
            };
            normalize(slots);
            normalize(seeds);
            let mut merged: Vec<(f64, Item, Money)> =
                slots.iter().chain(seeds.iter()).copied().collect();
            sort_ranked(&mut merged);
            merged
        }
        MergeRule::Alternate => {
            let mut merged = Vec::with_capacity(slots.len() + seeds.len());
            let mut a = slots.iter();
            let mut b = seeds.iter();
            loop {
                match (a.next(), b.next()) {
                    (Some(x), Some(y)) => {
                        merged.push(*x);
                        merged.push(*y);
                    }
                    (Some(x), None) => merged.push(*x),
                    (None, Some(y)) => merged.push(*y),
                    (None, None) => break,
                }
            }
            merged
        }
    }
}

fn commit_in_order(
    eval: &PhiEvaluator<'_>,
    budget: Money,
    ranked: &[(f64, Item, Money)],
) -> Result<RunResult, OptimizeError> {
    let mut state = SelectionState::new(budget);
    for &(_, item, cost) in ranked {
        if state.fits(item, cost) {
            let gain = eval.marginal_phi(state.slots(), state.seeds(), item)?;
            state.commit(item, cost, gain.gain);
        }
    }
    state.finish(eval)
}
