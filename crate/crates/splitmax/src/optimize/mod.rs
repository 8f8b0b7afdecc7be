//! Budget-splitting optimizers: the sampled ratio greedy, the two-phase
//! lazy greedy, and four ranking baselines. Every algorithm returns a
//! budget-feasible [`Solution`] plus a [`GreedyTrace`] of its commits.

mod baselines;
mod pagerank;
mod randomized;
mod tpg;

pub use baselines::{baseline_hdh, baseline_pagerank, baseline_random, baseline_top_k, MergeRule};
pub use pagerank::pagerank_scores;
pub use randomized::randomized_greedy;
pub use tpg::{eager_greedy, tpg};

use std::cmp::Ordering;
use std::str::FromStr;

use crate::billboard::SlotUserMatrix;
use crate::combined::{EvalError, EvalMode, Item, MarginalGain, ObjectiveValue, PhiEvaluator};
use crate::data::{Money, ProblemInstance, SlotId, UserId};

#[derive(Debug, thiserror::Error)]
pub enum OptimizeError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("damping must lie in (0, 1), got {0}")]
    BadDamping(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The six selectable algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[serde(rename = "rg")]
    RandomizedGreedy,
    Tpg,
    Random,
    TopK,
    Hdh,
    Pagerank,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::RandomizedGreedy,
        Algorithm::Tpg,
        Algorithm::Random,
        Algorithm::TopK,
        Algorithm::Hdh,
        Algorithm::Pagerank,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::RandomizedGreedy => "rg",
            Algorithm::Tpg => "tpg",
            Algorithm::Random => "random",
            Algorithm::TopK => "topk",
            Algorithm::Hdh => "hdh",
            Algorithm::Pagerank => "pagerank",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rg" => Ok(Algorithm::RandomizedGreedy),
            "tpg" => Ok(Algorithm::Tpg),
            "random" => Ok(Algorithm::Random),
            "topk" => Ok(Algorithm::TopK),
            "hdh" => Ok(Algorithm::Hdh),
            "pagerank" => Ok(Algorithm::Pagerank),
            other => Err(format!(
                "unknown algorithm {other:?} (expected rg, tpg, random, topk, hdh, pagerank)"
            )),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An instance with its slot-user matrix built once, shared by any number
/// of optimizer runs.
pub struct Prepared<'a> {
    pub instance: &'a ProblemInstance,
    pub matrix: SlotUserMatrix,
}

impl<'a> Prepared<'a> {
    pub fn new(instance: &'a ProblemInstance) -> Self {
        let matrix = SlotUserMatrix::build(
            &instance.trajectories,
            &instance.slots,
            instance.lambda,
            instance.coord_mode,
        );
        Self { instance, matrix }
    }

    pub fn evaluator(&self, mode: EvalMode) -> Result<PhiEvaluator<'_>, OptimizeError> {
        Ok(PhiEvaluator::new(&self.matrix, &self.instance.graph, mode)?)
    }

    /// All slots with their costs, ascending by id.
    pub(crate) fn slot_pool(&self) -> Vec<(SlotId, Money)> {
        let mut pool: Vec<(SlotId, Money)> = self
            .instance
            .slots
            .slots()
            .iter()
            .map(|s| (s.id, s.cost))
            .collect();
        pool.sort_unstable_by_key(|(id, _)| *id);
        pool
    }

    /// All graph nodes with their seed costs, ascending by id.
    pub(crate) fn seed_pool(&self) -> Vec<(UserId, Money)> {
        self.instance
            .graph
            .nodes()
            .iter()
            .map(|&u| (u, self.instance.graph.seed_cost(u).expect("node in graph")))
            .collect()
    }
}

/// A selected bundle: the chosen slots and seeds, the money spent on each
/// channel, and the achieved objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub slots: Vec<SlotId>,
    pub seeds: Vec<UserId>,
    pub spent_billboard: Money,
    pub spent_social: Money,
    pub phi: ObjectiveValue,
}

impl Solution {
    pub fn total_spent(&self) -> Money {
        self.spent_billboard + self.spent_social
    }
}

/// One committed selection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    #[serde(serialize_with = "serialize_item")]
    pub item: Item,
    pub cost: Money,
    pub gain: f64,
    pub remaining_budget: Money,
}

fn serialize_item<S: serde::Serializer>(item: &Item, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&item.to_string())
}

/// Ordered log of every commit an optimizer made.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct GreedyTrace {
    pub steps: Vec<TraceStep>,
}

impl GreedyTrace {
    pub fn items(&self) -> Vec<Item> {
        self.steps.iter().map(|s| s.item).collect()
    }
}

/// A solution together with its trace.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub solution: Solution,
    pub trace: GreedyTrace,
}

/// Growing selection state shared by all optimizers: keeps the two spend
/// accumulators, the trace, and the budget-feasibility rule in one place.
pub(crate) struct SelectionState {
    budget: Money,
    slots: Vec<SlotId>,
    seeds: Vec<UserId>,
    spent_billboard: Money,
    spent_social: Money,
    trace: GreedyTrace,
}

impl SelectionState {
    pub fn new(budget: Money) -> Self {
        Self {
            budget,
            slots: Vec::new(),
            seeds: Vec::new(),
            spent_billboard: 0.0,
            spent_social: 0.0,
            trace: GreedyTrace::default(),
        }
    }

    pub fn slots(&self) -> &[SlotId] {
        &self.slots
    }

    pub fn seeds(&self) -> &[UserId] {
        &self.seeds
    }

    pub fn remaining(&self) -> Money {
        self.budget - (self.spent_billboard + self.spent_social)
    }

    pub fn commits(&self) -> usize {
        self.trace.steps.len()
    }

    /// Whether committing `(item, cost)` keeps the selection within budget.
    /// Tests the exact post-commit accumulator sum so float rounding can
    /// never overshoot.
    pub fn fits(&self, item: Item, cost: Money) -> bool {
        let (nb, ns) = match item {
            Item::Slot(_) => (self.spent_billboard + cost, self.spent_social),
            Item::Seed(_) => (self.spent_billboard, self.spent_social + cost),
        };
        nb + ns <= self.budget
    }

    /// Commit an item the caller has already checked with [`fits`].
    pub fn commit(&mut self, item: Item, cost: Money, gain: f64) {
        debug_assert!(self.fits(item, cost));
        match item {
            Item::Slot(s) => {
                self.slots.push(s);
                self.spent_billboard += cost;
            }
            Item::Seed(u) => {
                self.seeds.push(u);
                self.spent_social += cost;
            }
        }
        let iteration = self.trace.steps.len() + 1;
        self.trace.steps.push(TraceStep {
            iteration,
            item,
            cost,
            gain,
            remaining_budget: self.remaining(),
        });
    }

    /// Finish the run: evaluate the final objective and assemble the result.
    pub fn finish(self, eval: &PhiEvaluator<'_>) -> Result<RunResult, OptimizeError> {
        let phi = eval.phi(&self.slots, &self.seeds)?;
        let solution = Solution {
            slots: self.slots,
            seeds: self.seeds,
            spent_billboard: self.spent_billboard,
            spent_social: self.spent_social,
            phi,
        };
        assert!(
            solution.spent_billboard + solution.spent_social <= self.budget,
            "selection overshot the budget"
        );
        Ok(RunResult {
            solution,
            trace: self.trace,
        })
    }
}

/// A candidate scored against the current selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scored {
    pub item: Item,
    pub cost: Money,
    pub gain: MarginalGain,
}

impl Scored {
    pub fn ratio(&self) -> f64 {
        self.gain.gain / self.cost
    }

    /// Total order: higher gain-per-cost first, ties broken by lower cost,
    /// then slots before seeds, then lower id.
    pub fn beats(&self, other: &Scored) -> bool {
        matches!(compare(self, other), Ordering::Greater)
    }
}

pub(crate) fn compare(a: &Scored, b: &Scored) -> Ordering {
    a.ratio()
        .partial_cmp(&b.ratio())
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.cost.partial_cmp(&a.cost).unwrap_or(Ordering::Equal))
        .then_with(|| b.item.cmp(&a.item))
}

/// Pick the better of two channel champions. In Monte Carlo mode a gap
/// smaller than three standard errors counts as a tie, resolved toward
/// the cheaper item (then slot kind, then lower id).
pub(crate) fn choose_cross_channel<'s>(slot: &'s Scored, seed: &'s Scored) -> &'s Scored {
    let band = 3.0
        * (slot.gain.std_error / slot.cost).max(seed.gain.std_error / seed.cost);
    if (slot.ratio() - seed.ratio()).abs() <= band {
        match slot
            .cost
            .partial_cmp(&seed.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| slot.item.cmp(&seed.item))
        {
            Ordering::Greater => seed,
            _ => slot,
        }
    } else if slot.beats(seed) {
        slot
    } else {
        seed
    }
}

/// Expected spread of the singleton seed set `{u}` under `mode`, through
/// the evaluator's memo.
pub(crate) fn seed_singleton(
    eval: &PhiEvaluator<'_>,
    u: UserId,
) -> Result<f64, OptimizeError> {
    Ok(eval.phi(&[], &[u])?.social)
}

/// Billboard influence of the singleton slot set `{s}`.
pub(crate) fn slot_singleton(prep: &Prepared<'_>, s: SlotId) -> f64 {
    crate::billboard::influence(&prep.matrix, &[s])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for algo in Algorithm::ALL {
            assert_eq!(algo.name().parse::<Algorithm>().unwrap(), algo);
        }
        assert!("celf".parse::<Algorithm>().is_err());
    }

    #[test]
    fn selection_state_accounting() {
        let mut st = SelectionState::new(10.0);
        assert!(st.fits(Item::Slot(SlotId(1)), 4.0));
        st.commit(Item::Slot(SlotId(1)), 4.0, 2.0);
        assert!(st.fits(Item::Seed(UserId(2)), 6.0));
        st.commit(Item::Seed(UserId(2)), 6.0, 1.0);
        assert!(!st.fits(Item::Slot(SlotId(3)), 0.5));
        assert_eq!(st.remaining(), 0.0);
        assert_eq!(st.trace.steps.len(), 2);
        assert!(st.trace.steps[0].remaining_budget > st.trace.steps[1].remaining_budget);
    }

    #[test]
    fn comparator_tie_breaks() {
        let mk = |item, cost, gain| Scored {
            item,
            cost,
            gain: MarginalGain {
                gain,
                std_error: 0.0,
            },
        };
        // higher ratio wins
        let a = mk(Item::Slot(SlotId(5)), 2.0, 4.0);
        let b = mk(Item::Slot(SlotId(1)), 2.0, 2.0);
        assert!(a.beats(&b));
        // equal ratio: cheaper wins
        let a = mk(Item::Slot(SlotId(5)), 1.0, 2.0);
        let b = mk(Item::Slot(SlotId(1)), 2.0, 4.0);
        assert!(a.beats(&b));
        // equal ratio and cost: slots before seeds, then lower id
        let slot = mk(Item::Slot(SlotId(5)), 2.0, 4.0);
        let seed = mk(Item::Seed(UserId(1)), 2.0, 4.0);
        assert!(slot.beats(&seed));
        let lo = mk(Item::Slot(SlotId(1)), 2.0, 4.0);
        let hi = mk(Item::Slot(SlotId(9)), 2.0, 4.0);
        assert!(lo.beats(&hi));
    }

    #[test]
    fn deadband_prefers_cheaper_under_noise() {
        let noisy = |item, cost, gain, se| Scored {
            item,
            cost,
            gain: MarginalGain {
                gain,
                std_error: se,
            },
        };
        let slot = noisy(Item::Slot(SlotId(1)), 4.0, 4.1, 1.0);
        let seed = noisy(Item::Seed(UserId(2)), 2.0, 1.9, 1.0);
        // ratios 1.025 vs 0.95 differ by less than 3 * (1.0 / 2.0)
        let picked = choose_cross_channel(&slot, &seed);
        assert_eq!(picked.item, Item::Seed(UserId(2)));
        // with no noise the higher ratio wins outright
        let slot = noisy(Item::Slot(SlotId(1)), 4.0, 4.1, 0.0);
        let seed = noisy(Item::Seed(UserId(2)), 2.0, 1.9, 0.0);
        assert_eq!(choose_cross_channel(&slot, &seed).item, Item::Slot(SlotId(1)));
    }
}
