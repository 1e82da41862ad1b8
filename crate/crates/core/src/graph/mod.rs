//! Communication graphs.
//!
//! Vertices are agents `0..n`. Every neighborhood is closed: agent `i` is
//! always a member of its own neighborhood, which is the virtual clique the
//! agent runs its local learner on.

mod io;
mod stats;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use io::{parse_edge_list, write_edge_list};
pub use stats::{graph_stats, graph_stats_exact, GraphStats, DEFAULT_EXACT_LIMIT};

/// Undirected simple graph with closed neighborhoods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphTopology {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighborhoods: Vec<Vec<usize>>,
}

impl GraphTopology {
    /// Builds a graph from unordered pairs. Duplicates (in either
    /// orientation) collapse; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("a graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Index { index: a.max(b), len: n });
            }
            if a == b {
                return Err(Error::Config(format!("self-loop on vertex {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighborhoods: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(a, b) in &set {
            neighborhoods[a].push(b);
            neighborhoods[b].push(a);
        }
        for nb in &mut neighborhoods {
            nb.sort_unstable();
        }
        Ok(Self { n, edges: set.into_iter().collect(), neighborhoods })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_edges(n, [])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config("a cycle needs at least 3 vertices".into()));
        }
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Disjoint union of cliques with the given sizes.
    pub fn clique_union(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let mut edges = Vec::new();
        let mut offset = 0;
        for &k in sizes {
            for i in 0..k {
                for j in i + 1..k {
                    edges.push((offset + i, offset + j));
                }
            }
            offset += k;
        }
        Self::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Closed neighborhood of `i`, sorted ascending.
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    /// `|N_i|`, self included.
    pub fn size(&self, i: usize) -> usize {
        self.neighborhoods[i].len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighborhoods[i].len() - 1
    }

    pub fn n_min(&self) -> usize {
        self.neighborhoods.iter().map(Vec::len).min().unwrap_or(1)
    }

    pub fn n_max(&self) -> usize {
        self.neighborhoods.iter().map(Vec::len).max().unwrap_or(1)
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.neighborhoods[i].binary_search(&j).is_ok()
    }

    /// `Some(K)` when every vertex has degree `K`.
    pub fn regular_degree(&self) -> Option<usize> {
        let k = self.degree(0);
        (0..self.n).all(|i| self.degree(i) == k).then_some(k)
    }

    /// Position of global agent `i` inside the sorted neighborhood of `j`.
    pub fn local_index(&self, j: usize, i: usize) -> Option<usize> {
        self.neighborhoods[j].binary_search(&i).ok()
    }

    /// Graph Laplacian `D - Adj`, degrees excluding self-loops.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(a, b) in &self.edges {
            l[(a, b)] = -1.0;
            l[(b, a)] = -1.0;
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
        }
        l
    }

    /// Vertex `j(i)` each agent delegates to: the smallest-index member of
    /// `N_i` that lies in `dom_set`.
    pub fn dominating_delegation(&self, dom_set: &[usize]) -> Result<Vec<usize>> {
        let mut in_set = vec![false; self.n];
        for &v in dom_set {
            if v >= self.n {
                return Err(Error::Index { index: v, len: self.n });
            }
            in_set[v] = true;
        }
        (0..self.n)
            .map(|i| {
                self.neighborhoods[i].iter().copied().find(|&j| in_set[j]).ok_or(Error::NotDominating { vertex: i })
            })
            .collect()
    }
}

/// G(n, p): each of the `n(n-1)/2` pairs is an edge independently with
/// probability `p`. Pairs are visited in lexicographic order, so the graph is
/// a pure function of `seed`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<GraphTopology> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    GraphTopology::from_edges(n, edges)
}
