//! Independence, domination and twice-independence numbers.
//!
//! Exact values come from subset enumeration and are only feasible for small
//! graphs; above the limit a greedy bound is returned and flagged.

use serde::{Deserialize, Serialize};

use super::GraphTopology;
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_LIMIT: usize = 16;
const HARD_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub alpha: usize,
    pub gamma: usize,
    /// Largest set whose members are pairwise at distance at least 3.
    pub alpha2: usize,
    pub is_regular: Option<usize>,
    /// True when the numbers are greedy bounds rather than exact values.
    pub approximate: bool,
}

fn closed_masks(g: &GraphTopology) -> Vec<u64> {
    g.neighborhoods().iter().map(|nb| nb.iter().fold(0u64, |m, &v| m | (1 << v))).collect()
}

/// Exact diagnostics; fails when `n > exact_limit`.
pub fn graph_stats_exact(g: &GraphTopology, exact_limit: usize) -> Result<GraphStats> {
    let n = g.n();
    if n > exact_limit.min(HARD_LIMIT) {
        return Err(Error::GraphTooLarge { n, limit: exact_limit.min(HARD_LIMIT) });
    }
    let closed = closed_masks(g);
    let open: Vec<u64> = closed.iter().enumerate().map(|(i, m)| m & !(1 << i)).collect();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    let mut alpha = 0;
    let mut alpha2 = 0;
    let mut gamma = n;
    for mask in 1..=full {
        let size = mask.count_ones() as usize;
        let mut independent = true;
        let mut twice = true;
        let mut covered = 0u64;
        let mut bits = mask;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if open[v] & mask != 0 {
                independent = false;
            }
            // distance >= 3 from every other member <=> disjoint closed neighborhoods
            if covered & closed[v] != 0 {
                twice = false;
            }
            covered |= closed[v];
        }
        if independent && size > alpha {
            alpha = size;
        }
        if twice && size > alpha2 {
            alpha2 = size;
        }
        if size < gamma && covered == full {
            gamma = size;
        }
    }
    Ok(GraphStats { alpha, gamma, alpha2, is_regular: g.regular_degree(), approximate: false })
}

/// Exact when `n <= exact_limit`, greedy otherwise.
pub fn graph_stats(g: &GraphTopology, exact_limit: usize) -> GraphStats {
    if g.n() <= exact_limit.min(HARD_LIMIT) {
        return graph_stats_exact(g, exact_limit).expect("size checked");
    }
    GraphStats {
        alpha: greedy_independent(g, 1),
        gamma: greedy_dominating(g),
        alpha2: greedy_independent(g, 2),
        is_regular: g.regular_degree(),
        approximate: true,
    }
}

/// Min-degree greedy. `radius` 1 gives an independent set; 2 removes the
/// distance-2 ball so chosen vertices are pairwise at distance >= 3.
fn greedy_independent(g: &GraphTopology, radius: usize) -> usize {
    let n = g.n();
    let mut alive = vec![true; n];
    let mut count = 0;
    loop {
        let pick =
            (0..n).filter(|&v| alive[v]).min_by_key(|&v| g.neighborhood(v).iter().filter(|&&u| alive[u]).count());
        let Some(v) = pick else { break };
        count += 1;
        let mut ball: Vec<usize> = g.neighborhood(v).to_vec();
        if radius >= 2 {
            let second: Vec<usize> = ball.iter().flat_map(|&u| g.neighborhood(u).to_vec()).collect();
            ball.extend(second);
        }
        for u in ball {
            alive[u] = false;
        }
    }
    count
}

fn greedy_dominating(g: &GraphTopology) -> usize {
    let n = g.n();
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut count = 0;
    while remaining > 0 {
        let v = (0..n)
            .max_by_key(|&v| {
                let gain = g.neighborhood(v).iter().filter(|&&u| !covered[u]).count();
                (gain, std::cmp::Reverse(v))
            })
            .expect("non-empty graph");
        for &u in g.neighborhood(v) {
            if !covered[u] {
                covered[u] = true;
                remaining -= 1;
            }
        }
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;

    fn exact(g: &GraphTopology) -> (usize, usize, usize) {
        let s = graph_stats_exact(g, DEFAULT_EXACT_LIMIT).unwrap();
        (s.alpha, s.gamma, s.alpha2)
    }

    #[test]
    fn small_named_graphs() {
        for n in 1..=6 {
            assert_eq!(exact(&GraphTopology::complete(n).unwrap()), (1, 1, 1));
        }
        assert_eq!(exact(&GraphTopology::path(4).unwrap()), (2, 2, 2));
        assert_eq!(exact(&GraphTopology::cycle(5).unwrap()), (2, 2, 1));
        assert_eq!(exact(&GraphTopology::empty(4).unwrap()), (4, 4, 4));
        let s = graph_stats_exact(&GraphTopology::cycle(5).unwrap(), 16).unwrap();
        assert_eq!(s.is_regular, Some(2));
    }

    #[test]
    fn disconnected_components_are_far_apart() {
        // two disjoint edges: alpha2 picks one vertex per component
        let g = GraphTopology::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(exact(&g), (2, 2, 2));
    }

    #[test]
    fn exact_mode_rejects_large_graphs() {
        let g = erdos_renyi(20, 0.5, 1).unwrap();
        assert!(matches!(graph_stats_exact(&g, 16), Err(Error::GraphTooLarge { n: 20, .. })));
        let s = graph_stats(&g, 16);
        assert!(s.approximate);
        assert!(s.alpha >= 1 && s.gamma >= 1 && s.alpha2 >= 1);
    }

    #[test]
    fn greedy_matches_exact_on_easy_cases() {
        let k = GraphTopology::complete(20).unwrap();
        let s = graph_stats(&k, 10);
        assert_eq!((s.alpha, s.gamma, s.alpha2), (1, 1, 1));
        let e = GraphTopology::empty(20).unwrap();
        let s = graph_stats(&e, 10);
        assert_eq!((s.alpha, s.gamma, s.alpha2), (20, 20, 20));
    }

    #[test]
    fn chain_holds_on_random_small_graphs() {
        for seed in 0..300 {
            let n = 1 + (seed % 7) as usize;
            let g = erdos_renyi(n, 0.1 + 0.8 * ((seed / 7) % 10) as f64 / 10.0, seed).unwrap();
            let (a, gm, a2) = exact(&g);
            assert!(a2 <= gm && gm <= a && a <= n, "seed {seed}: {a2} {gm} {a}");
        }
    }
}
