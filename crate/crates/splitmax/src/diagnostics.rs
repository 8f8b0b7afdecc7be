//! Brute-force oracles and structure measurement on small instances:
//! exhaustive optimal solutions, the bisubmodularity ratio and generalized
//! curvature of the objective, the approximation bound they induce, and a
//! randomized search for bisubmodularity violations.
//!
//! Everything here runs in exact evaluation mode only; Monte Carlo noise
//! would corrupt the measured ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;


use crate::billboard::SurvivalState;
use crate::combined::PhiParts;
use crate::data::{Money, ProblemInstance, SlotId, SocialGraph, UserId};
use crate::diffusion::{exact_activation, exact_spread};
use crate::exec;
use crate::optimize::Prepared;

/// Joint slot+seed element cap for exhaustive subset-pair enumeration.
pub const BRUTE_FORCE_ELEMENT_LIMIT: usize = 16;

/// Per-side element cap for the ratio/curvature quantifier enumeration.
pub const MEASURE_SIDE_LIMIT: usize = 10;

/// Joint cap on dense objective-table construction.
pub const TABLE_ELEMENT_LIMIT: usize = 20;

/// Gains and denominators at or below this magnitude count as zero; the
/// defining inequalities are vacuous there.
const ZERO_GAIN: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("instance has {elements} slot+seed elements; brute force enumerates at most {limit}")]
    TooLargeForBruteForce { elements: usize, limit: usize },
    #[error("side with {elements} elements exceeds the measurement cap {limit}")]
    TooLargeForMeasure { elements: usize, limit: usize },
    #[error(transparent)]
    Optimize(#[from] crate::optimize::OptimizeError),
    #[error(transparent)]
    Eval(#[from] crate::combined::EvalError),
    #[error(transparent)]
    Diffusion(#[from] crate::diffusion::DiffusionError),
}

/// Dense objective table over every (slot subset, seed subset) pair of a
/// small instance, indexed by bitmasks.
pub struct PhiTable {
    pub slots: Vec<SlotId>,
    pub seeds: Vec<UserId>,
    values: Vec<f64>,
}

impl PhiTable {
    /// Evaluate the full table in exact mode.
    pub fn build(prep: &Prepared<'_>) -> Result<Self, DiagnosticsError> {
        Self::build_with_parts(prep, PhiParts::default())
    }

    /// Lock-free assembly: spreads, per-seed activation vectors, and
    /// per-mask billboard coverage are hoisted out of the pair loop. All
    /// per-pair arithmetic replays the evaluator's operation order, so
    /// table entries equal `PhiEvaluator::phi` bitwise.
    pub fn build_with_parts(
        prep: &Prepared<'_>,
        parts: PhiParts,
    ) -> Result<Self, DiagnosticsError> {
        let mut slots: Vec<SlotId> = prep.instance.slots.slots().iter().map(|s| s.id).collect();
        slots.sort_unstable();
        let seeds: Vec<UserId> = prep.instance.graph.nodes().to_vec();
        let (a, b) = (slots.len(), seeds.len());
        if a + b > TABLE_ELEMENT_LIMIT {
            return Err(DiagnosticsError::TooLargeForBruteForce {
                elements: a + b,
                limit: TABLE_ELEMENT_LIMIT,
            });
        }
        let matrix = &prep.matrix;
        let graph = &prep.instance.graph;
        let n_users = matrix.users().len();

        // per slot-mask: (billboard influence, per-user coverage)
        let coverage: Vec<(f64, Vec<f64>)> = exec::map_indexed(1usize << a, |s_mask| {
            let mut state = SurvivalState::new(matrix);
            for (i, &s) in slots.iter().enumerate() {
                if s_mask >> i & 1 == 1 {
                    state.insert(matrix, s);
                }
            }
            let cov: Vec<f64> = (0..n_users).map(|u| state.coverage(u)).collect();
            (state.influence(), cov)
        });

        // per seed-mask: exact expected spread
        let spreads: Vec<Result<f64, DiagnosticsError>> =
            exec::map_indexed(1usize << b, |n_mask| {
                Ok(exact_spread(graph, &select(&seeds, n_mask as u32))?)
            });
        let spreads = spreads.into_iter().collect::<Result<Vec<f64>, _>>()?;

        // per seed: activation probability of each matrix user
        let activations: Vec<Result<Vec<f64>, DiagnosticsError>> =
            exec::map_indexed(b, |i| {
                let map = exact_activation(graph, seeds[i])?;
                Ok(matrix
                    .users()
                    .iter()
                    .map(|u| map.get(u).copied().unwrap_or(0.0))
                    .collect())
            });
        let activations = activations
            .into_iter()
            .collect::<Result<Vec<Vec<f64>>, _>>()?;

        let values: Vec<f64> = exec::map_indexed(1usize << (a + b), |joint| {
            let s_mask = joint >> b;
            let n_mask = joint & ((1usize << b) - 1);
            let billboard = if parts.billboard { coverage[s_mask].0 } else { 0.0 };
            let social = if parts.social { spreads[n_mask] } else { 0.0 };
            let interaction =
                if parts.interaction && s_mask != 0 && n_mask != 0 {
                    let cov = &coverage[s_mask].1;
                    let mut total = 0.0;
                    for (u, &p_bill) in cov.iter().enumerate() {
                        if p_bill == 0.0 {
                            continue;
                        }
                        let mut miss_all = 1.0;
                        for (i, act) in activations.iter().enumerate() {
                            if n_mask >> i & 1 == 1 {
                                miss_all *= 1.0 - act[u];
                            }
                        }
                        total += p_bill * (1.0 - miss_all);
                    }
                    total
                } else {
                    0.0
                };
            billboard + social + interaction
        });
        Ok(Self {
            slots,
            seeds,
            values,
        })
    }

    pub fn phi(&self, s_mask: u32, n_mask: u32) -> f64 {
        let joint = ((s_mask as usize) << self.seeds.len()) | n_mask as usize;
        self.values[joint]
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn seed_count(&self) -> usize {
        self.seeds.len()
    }
}

fn select<T: Copy>(universe: &[T], mask: u32) -> Vec<T> {
    universe
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, t)| *t)
        .collect()
}

/// The exhaustively optimal solution of a small instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub best_slots: Vec<SlotId>,
    pub best_seeds: Vec<UserId>,
    pub phi_opt: f64,
    pub enumerated: usize,
}

/// Enumerate every budget-feasible (slot subset, seed subset) pair and
/// return the objective maximizer; ties resolve to the lexicographically
/// smallest id sets.
pub fn brute_force_optimum(prep: &Prepared<'_>) -> Result<OracleSolution, DiagnosticsError> {
    let elements = prep.instance.slots.len() + prep.instance.graph.node_count();
    if elements > BRUTE_FORCE_ELEMENT_LIMIT {
        return Err(DiagnosticsError::TooLargeForBruteForce {
            elements,
            limit: BRUTE_FORCE_ELEMENT_LIMIT,
        });
    }
    let table = PhiTable::build(prep)?;
    let slot_costs: Vec<Money> = table
        .slots
        .iter()
        .map(|&s| prep.instance.slots.slot(s).expect("slot in set").cost)
        .collect();
    let seed_costs: Vec<Money> = table
        .seeds
        .iter()
        .map(|&u| prep.instance.graph.seed_cost(u).expect("node in graph"))
        .collect();
    let budget = prep.instance.budget;

    let mut best: Option<(f64, u32, u32)> = None;
    let mut enumerated = 0usize;
    for s_mask in 0u32..1 << table.slot_count() {
        let cost_s: Money = cost_of(&slot_costs, s_mask);
        if cost_s > budget {
            continue;
        }
        for n_mask in 0u32..1 << table.seed_count() {
            let total = cost_s + cost_of(&seed_costs, n_mask);
            if total > budget {
                continue;
            }
            enumerated += 1;
            let phi = table.phi(s_mask, n_mask);
            let candidate = (phi, s_mask, n_mask);
            let replace = match best {
                None => true,
                Some(cur) => phi > cur.0 || (phi == cur.0 && lex_smaller(candidate, cur)),
            };
            if replace {
                best = Some(candidate);
            }
        }
    }
    let (phi_opt, s_mask, n_mask) = best.expect("empty pair always feasible");
    Ok(OracleSolution {
        best_slots: select(&table.slots, s_mask),
        best_seeds: select(&table.seeds, n_mask),
        phi_opt,
        enumerated,
    })
}

fn cost_of(costs: &[Money], mask: u32) -> Money {
    costs
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .fold(0.0, |acc, (_, c)| acc + c)
}

/// Mask-pair order matching "lexicographically smallest id sets": compare
/// the sorted id vectors element by element, slots first.
fn lex_smaller(a: (f64, u32, u32), b: (f64, u32, u32)) -> bool {
    let key = |m: u32| {
        let mut ids: Vec<u32> = (0..32).filter(|i| m >> i & 1 == 1).collect();
        ids.sort_unstable();
        ids
    };
    (key(a.1), key(a.2)) < (key(b.1), key(b.2))
}

/// Measured structure of the objective on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub gamma: f64,
    pub alpha: f64,
    /// The approximation guarantee `(1/alpha) * (1 - e^(-gamma*alpha))`.
    pub bound: f64,
    /// True when no case with positive joint gain existed and gamma
    /// defaulted to 1.
    pub gamma_vacuous: bool,
    /// True when element caps truncated the quantifier enumeration, making
    /// gamma an upper and alpha a lower estimate.
    pub truncated: bool,
    pub violation_witness: Option<ViolationWitness>,
}

/// Evaluate the guarantee formula; the alpha -> 0 limit is gamma.
pub fn approximation_bound(gamma: f64, alpha: f64) -> f64 {
    if alpha.abs() < 1e-15 {
        gamma
    } else {
        (1.0 - (-gamma * alpha).exp()) / alpha
    }
}

/// Sum-of-singleton-gains over joint-gain ratio, minimized over every
/// quantified configuration of either channel. 1 means the objective
/// behaves bisubmodularly; smaller means joint gains outrun their parts.
pub fn measure_gamma(prep: &Prepared<'_>) -> Result<(f64, bool), DiagnosticsError> {
    check_measure_caps(prep)?;
    let table = PhiTable::build(prep)?;
    let (a, b) = (table.slot_count(), table.seed_count());

    // slot-side: base q over slots, bundle omega over slots, any seed set
    let slot_min = exec::map_indexed(1usize << a, |q| {
        let q = q as u32;
        let mut local = f64::INFINITY;
        for omega in 0u32..1 << a {
            let extra = omega & !q;
            if extra == 0 {
                continue;
            }
            for n in 0u32..1 << b {
                let base = table.phi(q, n);
                let joint = table.phi(q | omega, n) - base;
                if joint <= ZERO_GAIN {
                    continue;
                }
                let singles: f64 = (0..a)
                    .filter(|i| extra >> i & 1 == 1)
                    .map(|i| table.phi(q | 1 << i, n) - base)
                    .sum();
                local = local.min(singles / joint);
            }
        }
        local
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    // seed-side: base q' over seeds, bundle omega' over seeds, any slot set
    let seed_min = exec::map_indexed(1usize << b, |q| {
        let q = q as u32;
        let mut local = f64::INFINITY;
        for omega in 0u32..1 << b {
            let extra = omega & !q;
            if extra == 0 {
                continue;
            }
            for s in 0u32..1 << a {
                let base = table.phi(s, q);
                let joint = table.phi(s, q | omega) - base;
                if joint <= ZERO_GAIN {
                    continue;
                }
                let singles: f64 = (0..b)
                    .filter(|i| extra >> i & 1 == 1)
                    .map(|i| table.phi(s, q | 1 << i) - base)
                    .sum();
                local = local.min(singles / joint);
            }
        }
        local
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    let raw = slot_min.min(seed_min);
    if raw.is_infinite() {
        // no configuration had positive joint gain: gamma is vacuous
        return Ok((1.0, true));
    }
    Ok((raw.clamp(f64::MIN_POSITIVE, 1.0), false))
}

/// Generalized curvature: one minus the worst-case shrink factor of an
/// element's gain when the rest of its channel grows. 0 means modular.
pub fn measure_alpha(prep: &Prepared<'_>) -> Result<f64, DiagnosticsError> {
    check_measure_caps(prep)?;
    let table = PhiTable::build(prep)?;
    let (a, b) = (table.slot_count(), table.seed_count());

    // slot-side: element i, base set S \ i, bundle omega, any seed set
    let slot_min = exec::map_indexed(1usize << a, |base| {
        let base = base as u32;
        let mut local = f64::INFINITY;
        for i in 0..a {
            if base >> i & 1 == 1 {
                continue;
            }
            // omega may overlap the base set but must exclude i
            for omega in 0u32..1 << a {
                if omega >> i & 1 == 1 {
                    continue;
                }
                for n in 0u32..1 << b {
                    let early = table.phi(base | 1 << i, n) - table.phi(base, n);
                    if early <= ZERO_GAIN {
                        continue;
                    }
                    let grown = base | omega;
                    let late = table.phi(grown | 1 << i, n) - table.phi(grown, n);
                    local = local.min(late / early);
                }
            }
        }
        local
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    // seed-side
    let seed_min = exec::map_indexed(1usize << b, |base| {
        let base = base as u32;
        let mut local = f64::INFINITY;
        for j in 0..b {
            if base >> j & 1 == 1 {
                continue;
            }
            for omega in 0u32..1 << b {
                if omega >> j & 1 == 1 {
                    continue;
                }
                for s in 0u32..1 << a {
                    let early = table.phi(s, base | 1 << j) - table.phi(s, base);
                    if early <= ZERO_GAIN {
                        continue;
                    }
                    let grown = base | omega;
                    let late = table.phi(s, grown | 1 << j) - table.phi(s, grown);
                    local = local.min(late / early);
                }
            }
        }
        local
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    let worst = slot_min.min(seed_min);
    if worst.is_infinite() {
        return Ok(0.0); // no positive-gain case: nothing deviates
    }
    Ok((1.0 - worst).clamp(0.0, 1.0))
}

fn check_measure_caps(prep: &Prepared<'_>) -> Result<(), DiagnosticsError> {
    for side in [prep.instance.slots.len(), prep.instance.graph.node_count()] {
        if side > MEASURE_SIDE_LIMIT {
            return Err(DiagnosticsError::TooLargeForMeasure {
                elements: side,
                limit: MEASURE_SIDE_LIMIT,
            });
        }
    }
    Ok(())
}

/// Full structure report: measured ratio, curvature, the induced bound,
/// and a violation witness if one exists on this instance.
pub fn structure_report(prep: &Prepared<'_>) -> Result<StructureReport, DiagnosticsError> {
    let (gamma, gamma_vacuous) = measure_gamma(prep)?;
    let alpha = measure_alpha(prep)?;
    let violation_witness = violation_in_instance(prep, PhiParts::default())?;
    Ok(StructureReport {
        gamma,
        alpha,
        bound: approximation_bound(gamma, alpha),
        gamma_vacuous,
        truncated: false,
        violation_witness,
    })
}

/// A constructive counterexample to bisubmodularity: nested set pairs and
/// an element whose marginal gain grows on the larger pair.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationWitness {
    pub base_slots: Vec<SlotId>,
    pub base_seeds: Vec<UserId>,
    pub super_slots: Vec<SlotId>,
    pub super_seeds: Vec<UserId>,
    #[serde(serialize_with = "serialize_element")]
    pub element: crate::combined::Item,
    /// Gain on the nested (smaller) pair.
    pub lhs: f64,
    /// Gain on the larger pair; a witness has `rhs > lhs + 1e-9`.
    pub rhs: f64,
    /// Seed of the synthetic instance the witness lives on, when the
    /// randomized search produced it.
    pub instance_seed: Option<u64>,
}

fn serialize_element<S: serde::Serializer>(
    item: &crate::combined::Item,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.serialize_str(&item.to_string())
}

/// Exhaustively look for a bisubmodularity violation on one instance.
pub fn violation_in_instance(
    prep: &Prepared<'_>,
    parts: PhiParts,
) -> Result<Option<ViolationWitness>, DiagnosticsError> {
    let table = PhiTable::build_with_parts(prep, parts)?;
    let (a, b) = (table.slot_count(), table.seed_count());
    for s_small in 0u32..1 << a {
        for s_large in 0u32..1 << a {
            if s_small & s_large != s_small {
                continue;
            }
            for n_small in 0u32..1 << b {
                for n_large in 0u32..1 << b {
                    if n_small & n_large != n_small {
                        continue;
                    }
                    // slot element outside the larger slot set
                    for i in 0..a {
                        if s_large >> i & 1 == 1 {
                            continue;
                        }
                        let lhs = table.phi(s_small | 1 << i, n_small)
                            - table.phi(s_small, n_small);
                        let rhs = table.phi(s_large | 1 << i, n_large)
                            - table.phi(s_large, n_large);
                        if rhs > lhs + 1e-9 {
                            return Ok(Some(ViolationWitness {
                                base_slots: select(&table.slots, s_small),
                                base_seeds: select(&table.seeds, n_small),
                                super_slots: select(&table.slots, s_large),
                                super_seeds: select(&table.seeds, n_large),
                                element: crate::combined::Item::Slot(table.slots[i]),
                                lhs,
                                rhs,
                                instance_seed: None,
                            }));
                        }
                    }
                    // seed element outside the larger seed set
                    for j in 0..b {
                        if n_large >> j & 1 == 1 {
                            continue;
                        }
                        let lhs = table.phi(s_small, n_small | 1 << j)
                            - table.phi(s_small, n_small);
                        let rhs = table.phi(s_large, n_large | 1 << j)
                            - table.phi(s_large, n_large);
                        if rhs > lhs + 1e-9 {
                            return Ok(Some(ViolationWitness {
                                base_slots: select(&table.slots, s_small),
                                base_seeds: select(&table.seeds, n_small),
                                super_slots: select(&table.slots, s_large),
                                super_seeds: select(&table.seeds, n_large),
                                element: crate::combined::Item::Seed(table.seeds[j]),
                                lhs,
                                rhs,
                                instance_seed: None,
                            }));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Configuration of the randomized violation search.
#[derive(Debug, Clone)]
pub struct ViolationSearchConfig {
    pub attempts: usize,
    pub n_users: usize,
    pub n_billboards: usize,
    pub n_edges: usize,
    /// Which objective components are active during the search.
    pub parts: PhiParts,
}

impl Default for ViolationSearchConfig {
    fn default() -> Self {
        Self {
            attempts: 1000,
            n_users: 4,
            n_billboards: 2,
            n_edges: 5,
            parts: PhiParts::default(),
        }
    }
}

/// Randomized search over small synthetic instances for a bisubmodularity
/// violation. Absence after the attempt budget is a valid outcome.
pub fn find_bisubmodularity_violation(
    config: &ViolationSearchConfig,
    rng_seed: u64,
) -> Result<Option<ViolationWitness>, DiagnosticsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..config.attempts {
        let instance_seed: u64 = rng.gen();
        let instance = crate::data::generate_synthetic(&crate::data::SyntheticConfig {
            n_users: config.n_users,
            n_billboards: config.n_billboards,
            n_edges: config.n_edges,
            checkins_per_user: 2,
            delta_slot: 43_200,
            lambda: 300.0,
            prob_model: crate::diffusion::EdgeProbabilityModel::Uniform { pc: 0.5 },
            seed_cost_scale: 10.0,
            rng_seed: instance_seed,
            ..Default::default()
        });
        let prep = Prepared::new(&instance);
        if let Some(mut witness) = violation_in_instance(&prep, config.parts)? {
            witness.instance_seed = Some(instance_seed);
            return Ok(Some(witness));
        }
    }
    Ok(None)
}

/// Check a solution value against the structural approximation guarantee.
/// Returns the verdict and the margin `phi - bound * phi_opt`.
pub fn verify_bound(
    phi_solution: f64,
    report: &StructureReport,
    oracle: &OracleSolution,
) -> (bool, f64) {
    let margin = phi_solution - report.bound * oracle.phi_opt;
    (margin >= -1e-9, margin)
}

/// Truncate an instance to its `max_elems` lowest-id slots and seeds so
/// the quantifier enumeration stays tractable; used by the diagnose CLI.
pub fn truncate_instance(
    instance: &ProblemInstance,
    max_elems: usize,
) -> Result<(ProblemInstance, bool), DiagnosticsError> {
    let mut truncated = false;
    let mut out = instance.clone();
    if instance.slots.len() > max_elems {
        truncated = true;
        let keep: Vec<crate::data::BillboardSlot> = instance
            .slots
            .slots()
            .iter()
            .take(max_elems)
            .copied()
            .collect();
        out.slots = crate::data::SlotSet::new(instance.slots.billboards().to_vec(), keep)
            .expect("subset of a valid slot set");
    }
    if instance.graph.node_count() > max_elems {
        truncated = true;
        let keep: Vec<UserId> = instance.graph.nodes().iter().take(max_elems).copied().collect();
        let edges: Vec<(UserId, UserId, f64)> = instance
            .graph
            .edges()
            .into_iter()
            .filter(|(u, v, _)| keep.contains(u) && keep.contains(v))
            .collect();
        let mut g = SocialGraph::new(keep.clone(), &edges).expect("filtered edges valid");
        let costs: Vec<Money> = keep
            .iter()
            .map(|u| instance.graph.seed_cost(*u).expect("node in graph"))
            .collect();
        g.set_seed_costs(costs);
        // drop trajectory records of users outside the kept universe
        let records: Vec<crate::data::TrajectoryRecord> = instance
            .trajectories
            .records()
            .iter()
            .filter(|r| keep.contains(&r.user))
            .copied()
            .collect();
        out.trajectories = crate::data::TrajectoryDB::with_horizon(
            records,
            instance.trajectories.horizon(),
        )
        .expect("records kept within the original horizon");
        out.graph = g;
    }
    Ok((out, truncated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combined::{EvalMode, PhiEvaluator};
    use crate::data::{generate_synthetic, SyntheticConfig};
    use crate::diffusion::EdgeProbabilityModel;

    fn tiny_instance(seed: u64, budget: Money) -> ProblemInstance {
        generate_synthetic(&SyntheticConfig {
            n_users: 5,
            n_billboards: 2,
            n_edges: 7,
            checkins_per_user: 2,
            delta_slot: 43_200,
            budget,
            prob_model: EdgeProbabilityModel::Uniform { pc: 0.4 },
            seed_cost_scale: 20.0,
            rng_seed: seed,
            ..Default::default()
        })
    }

    #[test]
    fn brute_force_trivials() {
        let inst = tiny_instance(1, 0.0);
        let prep = Prepared::new(&inst);
        let oracle = brute_force_optimum(&prep).unwrap();
        assert!(oracle.best_slots.is_empty() && oracle.best_seeds.is_empty());
        assert_eq!(oracle.phi_opt, 0.0);
    }

    #[test]
    fn brute_force_single_affordable_candidate() {
        let mut inst = tiny_instance(2, 5.0);
        // the only affordable item is the highest-impression slot
        let prep = Prepared::new(&inst);
        let target = inst
            .slots
            .slots()
            .iter()
            .map(|s| s.id)
            .max_by_key(|&id| prep.matrix.impressions(id))
            .unwrap();
        assert!(prep.matrix.impressions(target) > 0);
        let costs: std::collections::HashMap<SlotId, Money> = inst
            .slots
            .slots()
            .iter()
            .map(|s| (s.id, if s.id == target { 5.0 } else { 1e9 }))
            .collect();
        inst.slots.set_costs(&costs);
        inst.graph.set_seed_costs(vec![1e9; inst.graph.node_count()]);
        let prep = Prepared::new(&inst);
        let oracle = brute_force_optimum(&prep).unwrap();
        assert_eq!(oracle.best_slots, vec![target]);
        assert!(oracle.best_seeds.is_empty());
    }

    #[test]
    fn brute_force_dominates_every_feasible_pair() {
        let inst = tiny_instance(3, 40.0);
        let prep = Prepared::new(&inst);
        let oracle = brute_force_optimum(&prep).unwrap();
        let table = PhiTable::build(&prep).unwrap();
        let slot_costs: Vec<Money> = table
            .slots
            .iter()
            .map(|&s| inst.slots.slot(s).unwrap().cost)
            .collect();
        let seed_costs: Vec<Money> = table
            .seeds
            .iter()
            .map(|&u| inst.graph.seed_cost(u).unwrap())
            .collect();
        for sm in 0u32..1 << table.slot_count() {
            for nm in 0u32..1 << table.seed_count() {
                if cost_of(&slot_costs, sm) + cost_of(&seed_costs, nm) <= inst.budget {
                    assert!(table.phi(sm, nm) <= oracle.phi_opt + 1e-12);
                }
            }
        }
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let inst = generate_synthetic(&SyntheticConfig {
            n_users: 15,
            n_billboards: 3,
            ..Default::default()
        });
        let prep = Prepared::new(&inst);
        assert!(matches!(
            brute_force_optimum(&prep),
            Err(DiagnosticsError::TooLargeForBruteForce { .. })
        ));
    }

    /// Hand-built additive instance: disjoint audiences, empty graph edges,
    /// interaction can't fire across channels that never overlap.
    fn additive_instance() -> ProblemInstance {
        use crate::data::*;
        // two slots on separate billboards, each covering its own user
        let boards = vec![
            Billboard {
                id: BillboardId(0),
                location: GeoPoint { lat: 0.0, lon: 0.0 },
                panel_size: 10.0,
            },
            Billboard {
                id: BillboardId(1),
                location: GeoPoint { lat: 5000.0, lon: 5000.0 },
                panel_size: 10.0,
            },
        ];
        let slots = derive_slots(&boards, 100, TimeInterval { start: 0, end: 100 }).unwrap();
        let records = vec![
            TrajectoryRecord {
                user: UserId(0),
                location: GeoPoint { lat: 1.0, lon: 0.0 },
                interval: TimeInterval { start: 10, end: 20 },
            },
            TrajectoryRecord {
                user: UserId(1),
                location: GeoPoint { lat: 5001.0, lon: 5000.0 },
                interval: TimeInterval { start: 10, end: 20 },
            },
        ];
        let db = TrajectoryDB::with_horizon(records, TimeInterval { start: 0, end: 100 }).unwrap();
        // all nodes isolated: spread is exactly |N| and every marginal
        // gain is independent of what else is selected
        let graph = SocialGraph::new(
            vec![UserId(0), UserId(1), UserId(2), UserId(3)],
            &[],
        )
        .unwrap();
        ProblemInstance::new(db, slots, graph, 100.0, 50.0, 100, CoordMode::Planar, 0).unwrap()
    }

    #[test]
    fn gamma_is_one_on_additive_instance() {
        // billboard-covered users have no social reach and vice versa, so
        // the interaction term is identically zero and gains are additive
        let inst = additive_instance();
        let prep = Prepared::new(&inst);
        let (gamma, vacuous) = measure_gamma(&prep).unwrap();
        assert!(!vacuous);
        assert!((gamma - 1.0).abs() < 1e-9, "gamma={gamma}");
    }

    #[test]
    fn alpha_is_zero_on_modular_instance() {
        // single-slot-per-audience coverage with certain activation makes
        // every late gain equal its early gain
        let inst = additive_instance();
        let prep = Prepared::new(&inst);
        let alpha = measure_alpha(&prep).unwrap();
        assert!(alpha < 1e-9, "alpha={alpha}");
    }

    #[test]
    fn gamma_alpha_ranges_on_random_instances() {
        for seed in 0..6u64 {
            let inst = tiny_instance(seed, 50.0);
            let prep = Prepared::new(&inst);
            let (gamma, _) = measure_gamma(&prep).unwrap();
            let alpha = measure_alpha(&prep).unwrap();
            assert!(gamma > 0.0 && gamma <= 1.0, "gamma={gamma}");
            assert!((0.0..=1.0).contains(&alpha), "alpha={alpha}");
            let bound = approximation_bound(gamma, alpha);
            assert!(bound > 0.0 && bound <= 1.0, "bound={bound}");
        }
    }

    #[test]
    fn corollary_identity_alpha_one() {
        for gamma in [0.05, 0.3, 0.77, 1.0] {
            let direct = approximation_bound(gamma, 1.0);
            assert!((direct - (1.0 - (-gamma).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn billboard_only_objective_has_no_witness() {
        let config = ViolationSearchConfig {
            attempts: 40,
            parts: PhiParts::BILLBOARD_ONLY,
            ..Default::default()
        };
        assert!(find_bisubmodularity_violation(&config, 77)
            .unwrap()
            .is_none());
    }

    #[test]
    fn full_objective_witness_found_and_reverifies() {
        let config = ViolationSearchConfig::default();
        let witness = find_bisubmodularity_violation(&config, 20250809)
            .unwrap()
            .expect("expected a violation within the attempt budget");
        assert!(witness.rhs > witness.lhs + 1e-9);
        // nesting structure holds
        for s in &witness.base_slots {
            assert!(witness.super_slots.contains(s));
        }
        for u in &witness.base_seeds {
            assert!(witness.super_seeds.contains(u));
        }
    }

    #[test]
    fn verify_bound_semantics() {
        let report = StructureReport {
            gamma: 0.8,
            alpha: 0.5,
            bound: approximation_bound(0.8, 0.5),
            gamma_vacuous: false,
            truncated: false,
            violation_witness: None,
        };
        let oracle = OracleSolution {
            best_slots: vec![],
            best_seeds: vec![],
            phi_opt: 10.0,
            enumerated: 1,
        };
        // the optimum always satisfies its own bound (bound < 1)
        let (ok, margin) = verify_bound(10.0, &report, &oracle);
        assert!(ok && margin > 0.0);
        // zero against a positive optimum fails
        let (ok, _) = verify_bound(0.0, &report, &oracle);
        assert!(!ok);
    }

    #[test]
    fn phi_table_matches_direct_evaluation() {
        let inst = tiny_instance(4, 30.0);
        let prep = Prepared::new(&inst);
        let table = PhiTable::build(&prep).unwrap();
        let eval = PhiEvaluator::new(&prep.matrix, &inst.graph, EvalMode::Exact).unwrap();
        let s = vec![table.slots[0], table.slots[2]];
        let n = vec![table.seeds[1]];
        let direct = eval.phi(&s, &n).unwrap().phi;
        assert!((table.phi(0b101, 0b10) - direct).abs() < 1e-12);
    }

    #[test]
    fn truncation_flags_and_caps() {
        let inst = generate_synthetic(&SyntheticConfig {
            n_users: 12,
            n_billboards: 4,
            n_edges: 20,
            ..Default::default()
        });
        let (cut, truncated) = truncate_instance(&inst, 6).unwrap();
        assert!(truncated);
        assert!(cut.slots.len() <= 6);
        assert!(cut.graph.node_count() <= 6);
    }
}
