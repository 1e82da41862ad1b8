//! Private variant of the protocol for linear losses.
//!
//! Agents never share raw gradients. The active agent releases a sanitized
//! prefix sum of its own gradients and, for each neighbor clique and grid
//! point, a sanitized prefix sum of its weighted expert losses. Receivers
//! overwrite the sender's row of their gradient table and the sender's
//! expert-loss entries; experts and Hedge weights are computed from those
//! tables alone.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::budget::{budget, extended_float, PrivacyBudget};
use super::tree::{level_count, AggregationTree};
use crate::engine::{adversarial_beta_scales, stochastic_beta_scales, BetaMode, WeightMatrix};
use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::learner::{HedgeCliqueState, Projection};
use crate::loss::{dot, Loss};
use crate::rng;

/// Stream id of agent `i`'s gradient tree.
pub fn gradient_stream_id(i: usize) -> String {
    format!("noise/g/{i}")
}

/// Stream id of the inner-product tree owned by `i` for clique `j`, grid index `k`.
pub fn scalar_stream_id(i: usize, j: usize, k: usize) -> String {
    format!("noise/s/{i}/{j}/{k}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopeStepRecord {
    pub t: usize,
    pub active: usize,
    pub fetched: Vec<(usize, Vec<f64>)>,
    pub prediction: Vec<f64>,
    pub loss_value: f64,
    pub gradient: Vec<f64>,
    /// Sanitized gradient prefix sum of the active agent.
    pub gamma_tilde: Vec<f64>,
    /// `(j, k, s~)` per neighbor clique and grid index.
    pub s_tilde: Vec<(usize, usize, f64)>,
}

/// Audit record emitted with every private trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpManifest {
    #[serde(with = "extended_float")]
    pub epsilon: f64,
    #[serde(with = "extended_float")]
    pub epsilon_prime: f64,
    pub scale_vec: f64,
    pub scale_scalar: f64,
    pub noise_terms_per_release: usize,
    pub max_grad_norm: f64,
    pub horizon: usize,
    pub n_max: usize,
    pub d: usize,
}

pub struct DopeNetworkState {
    graph: GraphTopology,
    weights: WeightMatrix,
    d: usize,
    horizon: usize,
    budget: PrivacyBudget,
    master_seed: u64,
    seed_overrides: BTreeMap<String, u64>,
    cliques: Vec<HedgeCliqueState>,
    /// Per clique `j`: latest `s~` indexed `[local_i * n_j + k]`.
    s_table: Vec<Vec<f64>>,
    gradient_trees: Vec<Option<AggregationTree>>,
    scalar_trees: HashMap<(usize, usize, usize), AggregationTree>,
    global_t: usize,
    max_grad_norm: f64,
}

impl DopeNetworkState {
    pub fn new(
        graph: GraphTopology,
        weights: WeightMatrix,
        d: usize,
        horizon: usize,
        epsilon: f64,
        mode: &BetaMode,
        master_seed: u64,
    ) -> Result<Self> {
        let n = graph.n();
        if weights.n() != n {
            return Err(Error::Dimension { expected: n, got: weights.n() });
        }
        let budget = budget(epsilon, graph.n_max(), d, horizon as f64)?;
        let scales = match mode {
            BetaMode::Auto | BetaMode::Adversarial => adversarial_beta_scales(&graph, &weights),
            BetaMode::Stochastic { q } => stochastic_beta_scales(&graph, &weights, q),
            BetaMode::Fixed { scales } => scales.clone(),
        };
        if scales.len() != n {
            return Err(Error::Dimension { expected: n, got: scales.len() });
        }
        let cliques = (0..n)
            .map(|j| HedgeCliqueState::new(graph.size(j), d, scales[j], Projection::ABall))
            .collect::<Result<Vec<_>>>()?;
        let s_table = (0..n).map(|j| vec![0.0; graph.size(j) * graph.size(j)]).collect();
        Ok(Self {
            graph,
            weights,
            d,
            horizon,
            budget,
            master_seed,
            seed_overrides: BTreeMap::new(),
            cliques,
            s_table,
            gradient_trees: (0..n).map(|_| None).collect(),
            scalar_trees: HashMap::new(),
            global_t: 0,
            max_grad_norm: 0.0,
        })
    }

    /// Replaces the seed of one noise stream; all other streams are unaffected.
    pub fn override_stream_seed(&mut self, stream_id: &str, seed: u64) {
        self.seed_overrides.insert(stream_id.to_string(), seed);
    }

    fn stream_seed(&self, id: &str) -> u64 {
        self.seed_overrides.get(id).copied().unwrap_or_else(|| rng::child_seed(self.master_seed, id))
    }

    pub fn budget(&self) -> &PrivacyBudget {
        &self.budget
    }

    pub fn graph(&self) -> &GraphTopology {
        &self.graph
    }

    pub fn clique(&self, j: usize) -> &HedgeCliqueState {
        &self.cliques[j]
    }

    pub fn global_t(&self) -> usize {
        self.global_t
    }

    pub fn max_grad_norm(&self) -> f64 {
        self.max_grad_norm
    }

    /// Number of scalar trees allocated so far.
    pub fn scalar_tree_count(&self) -> usize {
        self.scalar_trees.len()
    }

    pub fn manifest(&self) -> DpManifest {
        DpManifest {
            epsilon: self.budget.epsilon,
            epsilon_prime: self.budget.epsilon_prime,
            scale_vec: self.budget.scale_vec,
            scale_scalar: self.budget.scale_scalar,
            noise_terms_per_release: level_count(self.horizon),
            max_grad_norm: self.max_grad_norm,
            horizon: self.horizon,
            n_max: self.budget.n_max,
            d: self.d,
        }
    }

    pub fn predict(&self, i: usize) -> Result<Vec<f64>> {
        Ok(self.fetch(i)?.1)
    }

    fn fetch(&self, i: usize) -> Result<(Vec<(usize, Vec<f64>)>, Vec<f64>)> {
        if i >= self.graph.n() {
            return Err(Error::Index { index: i, len: self.graph.n() });
        }
        let mut x = vec![0.0; self.d];
        let mut fetched = Vec::with_capacity(self.graph.size(i));
        for &j in self.graph.neighborhood(i) {
            let local = self.graph.local_index(j, i).expect("symmetric neighborhoods");
            let row = self.cliques[j].predict(local)?;
            let w = self.weights.get(i, j);
            for (a, r) in x.iter_mut().zip(&row) {
                *a += w * r;
            }
            fetched.push((j, row));
        }
        Ok((fetched, x))
    }

    pub fn step_with(&mut self, active: usize, loss: &Loss) -> Result<DopeStepRecord> {
        let Loss::Linear { gradient: g } = loss else {
            return Err(Error::Unsupported("the private protocol is defined for linear losses only".into()));
        };
        if g.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: g.len() });
        }
        let (fetched, x) = self.fetch(active)?;
        let loss_value = loss.value(&x);
        self.max_grad_norm = self.max_grad_norm.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());

        if self.gradient_trees[active].is_none() {
            let seed = self.stream_seed(&gradient_stream_id(active));
            self.gradient_trees[active] =
                Some(AggregationTree::new(self.horizon, self.d, self.budget.scale_vec, seed)?);
        }
        let gamma_tilde = self.gradient_trees[active].as_mut().expect("allocated above").release(g)?;

        let neighborhood = self.graph.neighborhood(active).to_vec();
        let mut s_out = Vec::new();
        let mut per_clique = Vec::with_capacity(neighborhood.len());
        for &j in &neighborhood {
            let local = self.graph.local_index(j, active).expect("symmetric neighborhoods");
            let w = self.weights.get(active, j);
            let rows = self.cliques[j].expert_rows(local)?;
            let mut releases = Vec::with_capacity(rows.len());
            for (k, row) in rows.iter().enumerate() {
                let value = w * dot(row, g);
                let key = (active, j, k);
                if !self.scalar_trees.contains_key(&key) {
                    let seed = self.stream_seed(&scalar_stream_id(active, j, k));
                    let tree = AggregationTree::new(self.horizon, 1, self.budget.scale_scalar, seed)?;
                    self.scalar_trees.insert(key, tree);
                }
                let s = self.scalar_trees.get_mut(&key).expect("inserted above").release(&[value])?[0];
                releases.push(s);
                s_out.push((j, k, s));
            }
            per_clique.push((j, local, w, releases));
        }

        // receivers apply the messages
        for (j, local, w, releases) in per_clique {
            let nj = self.graph.size(j);
            let table = &mut self.s_table[j];
            table[local * nj..(local + 1) * nj].copy_from_slice(&releases);
            let cumloss: Vec<f64> = (0..nj).map(|k| (0..nj).map(|i| table[i * nj + k]).sum()).collect();
            let row: Vec<f64> = gamma_tilde.iter().map(|v| w * v).collect();
            self.cliques[j].apply_sanitized(local, &row, &cumloss)?;
        }

        let rec = DopeStepRecord {
            t: self.global_t,
            active,
            fetched,
            prediction: x,
            loss_value,
            gradient: g.clone(),
            gamma_tilde,
            s_tilde: s_out,
        };
        self.global_t += 1;
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{make_weights, NetworkState, WeightScheme};
    use crate::learner::BaseLearner;

    #[test]
    fn single_agent_row_is_the_gradient() {
        let g = GraphTopology::empty(1).unwrap();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        let mut dope = DopeNetworkState::new(g, w, 2, 16, f64::INFINITY, &BetaMode::Adversarial, 0).unwrap();
        dope.step_with(0, &Loss::Linear { gradient: vec![0.6, -0.8] }).unwrap();
        assert_eq!(dope.clique(0).theta(), &[0.6, -0.8]);
    }

    #[test]
    fn rejects_quadratic_losses() {
        let g = GraphTopology::empty(1).unwrap();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        let mut dope = DopeNetworkState::new(g, w, 1, 16, 1.0, &BetaMode::Adversarial, 0).unwrap();
        assert!(matches!(dope.step_with(0, &Loss::Quadratic { center: vec![0.0] }), Err(Error::Unsupported(_))));
    }

    #[test]
    fn infinite_epsilon_tracks_the_plain_protocol() {
        let g = GraphTopology::path(3).unwrap();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        let mut dope =
            DopeNetworkState::new(g.clone(), w.clone(), 2, 64, f64::INFINITY, &BetaMode::Adversarial, 1).unwrap();
        let mut plain = NetworkState::with_mode(g, w, BaseLearner::hedge(), 2, &BetaMode::Adversarial, None).unwrap();
        for t in 0..64 {
            let a = t * 7 % 3;
            let th = t as f64 * 0.7;
            let loss = Loss::Linear { gradient: vec![th.cos(), th.sin()] };
            let r1 = dope.step_with(a, &loss).unwrap();
            let r2 = plain.step_with(a, &loss).unwrap();
            for (u, v) in r1.prediction.iter().zip(&r2.prediction) {
                assert!((u - v).abs() <= 1e-9);
            }
        }
        let m = dope.manifest();
        assert_eq!(m.noise_terms_per_release, 7);
        assert_eq!(m.scale_vec, 0.0);
    }

    fn path_run(overrides: &[(&str, u64)]) -> Vec<DopeStepRecord> {
        let g = GraphTopology::path(3).unwrap();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        let mut dope = DopeNetworkState::new(g, w, 2, 128, 1.0, &BetaMode::Adversarial, 42).unwrap();
        for (id, seed) in overrides {
            dope.override_stream_seed(id, *seed);
        }
        (0..128)
            .map(|t| {
                let th = t as f64 * 1.3;
                let loss = Loss::Linear { gradient: vec![th.cos(), th.sin()] };
                dope.step_with((t * 5 + 1) % 3, &loss).unwrap()
            })
            .collect()
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let a = path_run(&[]);
        let b = path_run(&[]);
        assert_eq!(a, b);
    }

    #[test]
    fn perturbing_one_stream_only_changes_that_stream() {
        let base = path_run(&[]);
        let target = scalar_stream_id(1, 2, 0);
        let moved = path_run(&[(target.as_str(), 7)]);
        let mut changed = 0;
        for (a, b) in base.iter().zip(&moved) {
            assert_eq!(a.gamma_tilde, b.gamma_tilde);
            for (x, y) in a.s_tilde.iter().zip(&b.s_tilde) {
                assert_eq!((x.0, x.1), (y.0, y.1));
                if a.active == 1 && x.0 == 2 && x.1 == 0 {
                    changed += usize::from(x.2 != y.2);
                } else {
                    assert_eq!(x.2, y.2);
                }
            }
        }
        assert!(changed > 0);

        let grad = gradient_stream_id(0);
        let moved = path_run(&[(grad.as_str(), 7)]);
        for (a, b) in base.iter().zip(&moved) {
            if a.active == 0 {
                assert_ne!(a.gamma_tilde, b.gamma_tilde);
            } else {
                assert_eq!(a.gamma_tilde, b.gamma_tilde);
            }
        }
    }
}
