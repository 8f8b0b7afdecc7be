//! Power-iteration PageRank over the social graph.

use crate::data::SocialGraph;
use crate::optimize::OptimizeError;

/// PageRank scores by node index. Dangling nodes distribute their rank
/// uniformly, so the scores always sum to 1. Stops when the L1 change
/// drops below `tol` or after `max_iter` rounds (the last iterate is
/// used, with a warning).
pub fn pagerank_scores(
    graph: &SocialGraph,
    damping: f64,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>, OptimizeError> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(OptimizeError::BadDamping(damping));
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let base = (1.0 - damping) / n as f64;
    let mut rank = vec![1.0 / n as f64; n];
    let mut converged = false;
    for _ in 0..max_iter {
        let mut next = vec![base; n];
        for (u, r_u) in rank.iter().enumerate() {
            let deg = graph.out_degree(u);
            if deg == 0 {
                let share = damping * r_u / n as f64;
                for r in next.iter_mut() {
                    *r += share;
                }
            } else {
                let share = damping * r_u / deg as f64;
                for &(v, _) in graph.out(u) {
                    next[v] += share;
                }
            }
        }
        let diff: f64 = rank
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum();
        rank = next;
        if diff < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("pagerank did not converge within {max_iter} iterations; using last iterate");
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::UserId;

    fn graph(nodes: &[u64], edges: &[(u64, u64)]) -> SocialGraph {
        SocialGraph::new(
            nodes.iter().map(|&i| UserId(i)).collect(),
            &edges
                .iter()
                .map(|&(u, v)| (UserId(u), UserId(v), 0.5))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn cycle_is_uniform() {
        let g = graph(&[0, 1, 2, 3, 4], &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let r = pagerank_scores(&g, 0.85, 100, 1e-12).unwrap();
        for score in r {
            assert!((score - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn two_node_chain_matches_hand_solution() {
        // u -> v with dangling v redistributing uniformly; solving the
        // 2x2 stationary equations by hand gives (20/57, 37/57)
        let g = graph(&[0, 1], &[(0, 1)]);
        let r = pagerank_scores(&g, 0.85, 200, 1e-14).unwrap();
        assert!((r[0] - 20.0 / 57.0).abs() < 1e-8, "u={}", r[0]);
        assert!((r[1] - 37.0 / 57.0).abs() < 1e-8, "v={}", r[1]);
    }

    #[test]
    fn empty_edges_uniform() {
        let g = graph(&[0, 1, 2], &[]);
        let r = pagerank_scores(&g, 0.85, 100, 1e-10).unwrap();
        for score in r {
            assert!((score - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_damping_rejected() {
        let g = graph(&[0], &[]);
        assert!(pagerank_scores(&g, 1.5, 10, 1e-8).is_err());
    }
}
