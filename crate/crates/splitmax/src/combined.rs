//! The combined objective: billboard influence plus social spread plus the
//! cross-channel interaction effect.
//!
//! The interaction term rewards users who can be hit through both
//! channels at once: per user it multiplies the probability of seeing at
//! least one selected billboard slot by the probability of being
//! activated by at least one selected seed, treating per-seed activations
//! as independent. That product term is what breaks bisubmodularity of
//! the total.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::billboard::{influence, SlotUserMatrix, SurvivalState};
use crate::data::{SlotId, SocialGraph, UserId};
use crate::diffusion::{
    estimate_spread, exact_spread, ActivationCache, DiffusionError, SpreadEstimate,
    EXACT_EDGE_LIMIT,
};

/// Most slots an exact-mode evaluator will accept.
pub const EXACT_SLOT_LIMIT: usize = 12;

/// How the diffusion side of the objective is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Monte Carlo spread and activation estimates with common random
    /// numbers derived from `rng_seed`.
    MonteCarlo { sims: u32, rng_seed: u64 },
    /// Live-edge enumeration; only valid on small graphs.
    Exact,
}

/// A value of the objective, broken into its three components.
/// `phi = billboard + social + interaction` always holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub phi: f64,
    pub billboard: f64,
    pub social: f64,
    pub interaction: f64,
    /// Standard error of the social spread estimate; zero in exact mode.
    pub std_error: f64,
}

impl ObjectiveValue {
    pub const ZERO: ObjectiveValue = ObjectiveValue {
        phi: 0.0,
        billboard: 0.0,
        social: 0.0,
        interaction: 0.0,
        std_error: 0.0,
    };
}

/// One selectable element of either channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Slot(SlotId),
    Seed(UserId),
}

impl std::fmt::Display for Item {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Item::Slot(s) => write!(f, "slot:{s}"),
            Item::Seed(u) => write!(f, "seed:{u}"),
        }
    }
}

/// Which components of the objective are active. Disabling parts turns the
/// objective into its single-channel restrictions, used by the structure
/// diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiParts {
    pub billboard: bool,
    pub social: bool,
    pub interaction: bool,
}

impl Default for PhiParts {
    fn default() -> Self {
        Self {
            billboard: true,
            social: true,
            interaction: true,
        }
    }
}

impl PhiParts {
    pub const BILLBOARD_ONLY: PhiParts = PhiParts {
        billboard: true,
        social: false,
        interaction: false,
    };
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("exact mode needs at most {limit} diffusion edges, graph has {edges}")]
    GraphTooLarge { edges: usize, limit: usize },
    #[error("exact mode needs at most {limit} slots, instance has {slots}")]
    TooManySlots { slots: usize, limit: usize },
    #[error("candidate {0} already selected")]
    DuplicateCandidate(Item),
    #[error("slot {0} outside the matrix universe")]
    UnknownSlot(SlotId),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}

/// Interaction effect between a slot set and a seed set given a per-seed
/// activation lookup `activation(seed, user)`.
///
/// Sums, over every user the matrix can reach, the product of the user's
/// billboard coverage probability and one minus the probability that all
/// selected seeds fail to activate them. Users outside the trajectory
/// data have zero coverage and users outside the graph have zero
/// activation, so those terms vanish and the sum effectively runs over
/// the union universe.
pub fn interaction_effect<F>(
    matrix: &SlotUserMatrix,
    slots: &[SlotId],
    seeds: &[UserId],
    activation: F,
) -> f64
where
    F: Fn(UserId, UserId) -> f64,
{
    if slots.is_empty() || seeds.is_empty() {
        return 0.0;
    }
    let mut state = SurvivalState::new(matrix);
    for &s in slots {
        state.insert(matrix, s);
    }
    let mut total = 0.0;
    for (i, &user) in matrix.users().iter().enumerate() {
        let p_bill = state.coverage(i);
        if p_bill == 0.0 {
            continue;
        }
        let mut miss_all = 1.0;
        for &seed in seeds {
            miss_all *= 1.0 - activation(seed, user);
        }
        total += p_bill * (1.0 - miss_all);
    }
    total
}

/// Shared evaluation context: the matrix and graph it scores against, the
/// evaluation mode, and memoized spread/activation results. All queries
/// take `&self`; the caches are internally synchronized and their
/// contents are pure functions of their keys, so concurrent use stays
/// deterministic.
pub struct PhiEvaluator<'a> {
    matrix: &'a SlotUserMatrix,
    graph: &'a SocialGraph,
    mode: EvalMode,
    parts: PhiParts,
    activation: ActivationCache,
    spread_memo: Mutex<HashMap<Vec<UserId>, SpreadEstimate>>,
}

impl<'a> PhiEvaluator<'a> {
    pub fn new(
        matrix: &'a SlotUserMatrix,
        graph: &'a SocialGraph,
        mode: EvalMode,
    ) -> Result<Self, EvalError> {
        Self::with_parts(matrix, graph, mode, PhiParts::default())
    }

    pub fn with_parts(
        matrix: &'a SlotUserMatrix,
        graph: &'a SocialGraph,
        mode: EvalMode,
        parts: PhiParts,
    ) -> Result<Self, EvalError> {
        if mode == EvalMode::Exact {
            let edges = graph.edge_count();
            if edges > EXACT_EDGE_LIMIT {
                return Err(EvalError::GraphTooLarge {
                    edges,
                    limit: EXACT_EDGE_LIMIT,
                });
            }
            let slots = matrix.slot_ids().len();
            if slots > EXACT_SLOT_LIMIT {
                return Err(EvalError::TooManySlots {
                    slots,
                    limit: EXACT_SLOT_LIMIT,
                });
            }
        }
        Ok(Self {
            matrix,
            graph,
            mode,
            parts,
            activation: ActivationCache::new(4096),
            spread_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    pub fn matrix(&self) -> &SlotUserMatrix {
        self.matrix
    }

    pub fn graph(&self) -> &SocialGraph {
        self.graph
    }

    /// Fill the spread memo for every subset of `seeds` and cache each
    /// seed's activation map, each computed exactly once (in parallel).
    /// Subset-enumerating callers do this first so their per-pair
    /// evaluations never compute under contention.
    pub fn prewarm_subsets(&self, seeds: &[UserId]) -> Result<(), EvalError> {
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        let activations: Vec<Result<(), EvalError>> =
            crate::exec::map_indexed(seeds.len(), |i| self.activation_map(seeds[i]).map(|_| ()));
        for a in activations {
            a?;
        }
        let warmed: Vec<Result<(), EvalError>> =
            crate::exec::map_indexed(1usize << seeds.len(), |mask| {
                let subset: Vec<UserId> = seeds
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, u)| *u)
                    .collect();
                self.spread(&subset).map(|_| ())
            });
        for w in warmed {
            w?;
        }
        Ok(())
    }

    /// Expected spread of a seed set, memoized per canonical set.
    fn spread(&self, seeds: &[UserId]) -> Result<SpreadEstimate, EvalError> {
        if seeds.is_empty() {
            return Ok(SpreadEstimate::ZERO);
        }
        let mut key = seeds.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(hit) = self.spread_memo.lock().unwrap().get(&key) {
            return Ok(*hit);
        }
        let est = match self.mode {
            EvalMode::Exact => SpreadEstimate {
                mean: exact_spread(self.graph, &key)?,
                std_error: 0.0,
                simulations: 0,
            },
            EvalMode::MonteCarlo { sims, rng_seed } => {
                estimate_spread(self.graph, &key, sims, rng_seed)?
            }
        };
        self.spread_memo.lock().unwrap().insert(key, est);
        Ok(est)
    }

    /// Activation map of a single seed, shared out of the cache.
    fn activation_map(
        &self,
        seed: UserId,
    ) -> Result<std::sync::Arc<HashMap<UserId, f64>>, EvalError> {
        Ok(match self.mode {
            EvalMode::Exact => self.activation.exact(self.graph, seed)?,
            EvalMode::MonteCarlo { sims, rng_seed } => {
                self.activation.monte_carlo(self.graph, seed, sims, rng_seed)?
            }
        })
    }

    /// Probability that `user` gets activated by a cascade from `seed`.
    pub fn activation_of(&self, seed: UserId, user: UserId) -> Result<f64, EvalError> {
        Ok(self
            .activation_map(seed)?
            .get(&user)
            .copied()
            .unwrap_or(0.0))
    }

    /// Evaluate the objective at `(slots, seeds)`.
    pub fn phi(&self, slots: &[SlotId], seeds: &[UserId]) -> Result<ObjectiveValue, EvalError> {
        let mut slots = slots.to_vec();
        slots.sort_unstable();
        slots.dedup();
        for &s in &slots {
            if !self.matrix.contains_slot(s) {
                return Err(EvalError::UnknownSlot(s));
            }
        }
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();

        let billboard = if self.parts.billboard {
            influence(self.matrix, &slots)
        } else {
            0.0
        };
        let (social, std_error) = if self.parts.social {
            let est = self.spread(&seeds)?;
            (est.mean, est.std_error)
        } else {
            (0.0, 0.0)
        };
        let interaction = if self.parts.interaction && !slots.is_empty() && !seeds.is_empty() {
            // one cache access per seed; the per-user loop reads the maps
            let maps: Vec<std::sync::Arc<HashMap<UserId, f64>>> = seeds
                .iter()
                .map(|&s| self.activation_map(s))
                .collect::<Result<_, _>>()?;
            interaction_effect(self.matrix, &slots, &seeds, |seed, user| {
                let i = seeds.binary_search(&seed).expect("seed in canonical set");
                maps[i].get(&user).copied().unwrap_or(0.0)
            })
        } else {
            0.0
        };
        Ok(ObjectiveValue {
            phi: billboard + social + interaction,
            billboard,
            social,
            interaction,
            std_error,
        })
    }

    /// Marginal objective gain of adding `candidate` on top of
    /// `(slots, seeds)`: the direct difference of two evaluations. In
    /// Monte Carlo mode both sides share random numbers, so the noise on
    /// the social component largely cancels.
    pub fn marginal_phi(
        &self,
        slots: &[SlotId],
        seeds: &[UserId],
        candidate: Item,
    ) -> Result<MarginalGain, EvalError> {
        let base = self.phi(slots, seeds)?;
        let with = match candidate {
            Item::Slot(s) => {
                if slots.contains(&s) {
                    return Err(EvalError::DuplicateCandidate(candidate));
                }
                let mut grown: Vec<SlotId> = slots.to_vec();
                grown.push(s);
                self.phi(&grown, seeds)?
            }
            Item::Seed(u) => {
                if seeds.contains(&u) {
                    return Err(EvalError::DuplicateCandidate(candidate));
                }
                let mut grown: Vec<UserId> = seeds.to_vec();
                grown.push(u);
                self.phi(slots, &grown)?
            }
        };
        Ok(MarginalGain {
            gain: with.phi - base.phi,
            std_error: with.std_error.max(base.std_error),
        })
    }
}

/// A marginal gain together with the noise scale of its estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalGain {
    pub gain: f64,
    pub std_error: f64,
}

/// One-shot objective evaluation on an instance. Builds the slot-user
/// matrix and an evaluator per call; loops should construct a
/// [`PhiEvaluator`] once and reuse it.
pub fn phi(
    instance: &crate::data::ProblemInstance,
    slots: &[SlotId],
    seeds: &[UserId],
    mode: EvalMode,
) -> Result<ObjectiveValue, EvalError> {
    let matrix = SlotUserMatrix::build(
        &instance.trajectories,
        &instance.slots,
        instance.lambda,
        instance.coord_mode,
    );
    PhiEvaluator::new(&matrix, &instance.graph, mode)?.phi(slots, seeds)
}

/// One-shot marginal gain on an instance; see [`phi`].
pub fn marginal_phi(
    instance: &crate::data::ProblemInstance,
    slots: &[SlotId],
    seeds: &[UserId],
    candidate: Item,
    mode: EvalMode,
) -> Result<MarginalGain, EvalError> {
    let matrix = SlotUserMatrix::build(
        &instance.trajectories,
        &instance.slots,
        instance.lambda,
        instance.coord_mode,
    );
    PhiEvaluator::new(&matrix, &instance.graph, mode)?.marginal_phi(slots, seeds, candidate)
}
