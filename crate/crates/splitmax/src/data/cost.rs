//! Cost models: slot rental prices proportional to influence, and
//! degree-proportional seed prices.

use super::{Money, SocialGraph, UserId};

/// Default scale for the degree-proportional seed cost model.
pub const DEFAULT_SEED_COST_SCALE: f64 = 1000.0;

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("slot cost scale {0} outside [0.8, 1.1]")]
    ScaleOutOfRange(f64),
    #[error("negative influence {0}")]
    NegativeInfluence(f64),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("user {0} not in graph")]
    UnknownUser(UserId),
}

/// Rental price of a slot: `floor(delta_scale * influence / 10)`, clamped
/// up to 1 so no item is ever free (ratio greedy divides by cost).
pub fn slot_cost(delta_scale: f64, influence: f64) -> Result<Money, CostError> {
    if !(0.8..=1.1).contains(&delta_scale) {
        return Err(CostError::ScaleOutOfRange(delta_scale));
    }
    if influence < 0.0 {
        return Err(CostError::NegativeInfluence(influence));
    }
    Ok(((delta_scale * influence / 10.0).floor()).max(1.0))
}

/// Degree-proportional seed price: `k * (|V| / sum of out-degrees) * out_degree(u)`.
/// Isolated nodes are clamped to cost 1.
pub fn seed_cost(user: UserId, graph: &SocialGraph, k: f64) -> Result<Money, CostError> {
    if graph.node_count() == 0 {
        return Err(CostError::EmptyGraph);
    }
    let i = graph
        .node_index(user)
        .ok_or(CostError::UnknownUser(user))?;
    let total_degree: usize = (0..graph.node_count()).map(|j| graph.out_degree(j)).sum();
    let deg = graph.out_degree(i);
    if deg == 0 || total_degree == 0 {
        return Ok(1.0);
    }
    Ok(k * (graph.node_count() as f64 / total_degree as f64) * deg as f64)
}
