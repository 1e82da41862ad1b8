//! The decentralized protocol: each agent `j` runs a clique learner over its
//! closed neighborhood `N_j`. At step `t` the active agent fetches its row
//! from every neighbor's clique model, predicts the weighted average, and
//! sends the weighted gradient back to the same neighbors.

mod schedule;
mod two_phase;
mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::learner::{BaseLearner, CliqueState};
use crate::loss::{feasible_surrogate, project_unit_ball, Loss};
use crate::stream::LossSource;

pub use schedule::{ActivationSchedule, Activations};
pub use two_phase::{estimated_beta_scale, warmup_length, TwoPhaseNetwork, DEFAULT_WARMUP_CONSTANT};
pub use weights::{make_weights, WeightMatrix, WeightScheme};

/// How each clique's learning-rate multiplier is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BetaMode {
    /// Stochastic schedules use their `q`, everything else the adversarial rule.
    Auto,
    /// `max_{i in N_j} w_ij`.
    Adversarial,
    /// `sqrt(sum_{i in N_j} (q_i / Q_j) w_ij^2)`.
    Stochastic {
        q: Vec<f64>,
    },
    Fixed {
        scales: Vec<f64>,
    },
}

pub fn adversarial_beta_scales(g: &GraphTopology, w: &WeightMatrix) -> Vec<f64> {
    (0..g.n()).map(|j| nonzero(g.neighborhood(j).iter().map(|&i| w.get(i, j)).fold(0.0, f64::max))).collect()
}

pub fn stochastic_beta_scales(g: &GraphTopology, w: &WeightMatrix, q: &[f64]) -> Vec<f64> {
    (0..g.n())
        .map(|j| {
            let nb = g.neighborhood(j);
            let big_q: f64 = nb.iter().map(|&i| q[i]).sum();
            if big_q <= 0.0 {
                return 1.0;
            }
            nonzero(nb.iter().map(|&i| q[i] / big_q * w.get(i, j).powi(2)).sum::<f64>().sqrt())
        })
        .collect()
}

fn nonzero(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

/// One protocol round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub active: usize,
    /// `(j, [Y^(j)]_{active})` for every `j` in the active neighborhood.
    pub fetched: Vec<(usize, Vec<f64>)>,
    /// Point played; the weighted average itself for Hedge cliques, its
    /// unit-ball projection for KT cliques.
    pub prediction: Vec<f64>,
    /// Weighted average of the fetched rows.
    pub raw_prediction: Vec<f64>,
    pub loss_value: f64,
    /// Subgradient at the played point.
    pub gradient: Vec<f64>,
    /// `(j, w_{active j} g)`, where KT cliques receive the feasibility
    /// surrogate of `g` instead.
    pub sent: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    graph: GraphTopology,
    weights: WeightMatrix,
    learner: BaseLearner,
    d: usize,
    cliques: Vec<CliqueState>,
    global_t: usize,
    max_grad_norm: f64,
}

impl NetworkState {
    pub fn new(
        graph: GraphTopology,
        weights: WeightMatrix,
        learner: BaseLearner,
        d: usize,
        beta_scales: &[f64],
    ) -> Result<Self> {
        let n = graph.n();
        if weights.n() != n {
            return Err(Error::Dimension { expected: n, got: weights.n() });
        }
        if beta_scales.len() != n {
            return Err(Error::Dimension { expected: n, got: beta_scales.len() });
        }
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        let cliques = (0..n)
            .map(|j| learner.build(graph.size(j), d, beta_scales[j], max_incoming(&graph, &weights, j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { graph, weights, learner, d, cliques, global_t: 0, max_grad_norm: 0.0 })
    }

    /// Builds the network with learning-rate scales chosen by `mode`;
    /// `schedule` only informs [`BetaMode::Auto`].
    pub fn with_mode(
        graph: GraphTopology,
        weights: WeightMatrix,
        learner: BaseLearner,
        d: usize,
        mode: &BetaMode,
        schedule: Option<&ActivationSchedule>,
    ) -> Result<Self> {
        let scales = match mode {
            BetaMode::Auto => match schedule.and_then(|s| s.probabilities()) {
                Some(q) => stochastic_beta_scales(&graph, &weights, q),
                None => adversarial_beta_scales(&graph, &weights),
            },
            BetaMode::Adversarial => adversarial_beta_scales(&graph, &weights),
            BetaMode::Stochastic { q } => {
                weights::validate_distribution(q, graph.n())?;
                stochastic_beta_scales(&graph, &weights, q)
            }
            BetaMode::Fixed { scales } => scales.clone(),
        };
        Self::new(graph, weights, learner, d, &scales)
    }

    pub fn graph(&self) -> &GraphTopology {
        &self.graph
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn learner(&self) -> BaseLearner {
        self.learner
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn clique(&self, j: usize) -> &CliqueState {
        &self.cliques[j]
    }

    pub fn cliques(&self) -> &[CliqueState] {
        &self.cliques
    }

    pub(crate) fn clique_mut(&mut self, j: usize) -> &mut CliqueState {
        &mut self.cliques[j]
    }

    pub fn global_t(&self) -> usize {
        self.global_t
    }

    /// Largest raw gradient norm seen so far.
    pub fn max_grad_norm(&self) -> f64 {
        self.max_grad_norm
    }

    /// What agent `i` would predict now.
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

    /// Turns the averaged rows into the played point, its loss and
    /// subgradient, and the gradient fed back to the cliques.
    pub(crate) fn play(&mut self, raw: &[f64], loss: &Loss) -> Played {
        // KT magnitudes are unbounded, so its points are made feasible
        let kt = matches!(self.learner, BaseLearner::Kt { .. });
        let x = if kt { project_unit_ball(raw).into_vec() } else { raw.to_vec() };
        let loss_value = loss.value(&x);
        let g = loss.subgradient(&x);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.max_grad_norm = self.max_grad_norm.max(gnorm);
        let fed = if kt { feasible_surrogate(raw, &g) } else { g.clone() };
        Played { x, loss_value, g, fed }
    }

    /// Runs one round with a given active agent and loss.
    pub fn step_with(&mut self, active: usize, loss: &Loss) -> Result<StepRecord> {
        if loss.dim() != self.d {
            return Err(Error::Dimension { expected: self.d, got: loss.dim() });
        }
        let (fetched, raw) = self.fetch(active)?;
        let Played { x, loss_value, g, fed } = self.play(&raw, loss);
        let mut sent = Vec::with_capacity(fetched.len());
        for &j in self.graph.neighborhood(active) {
            let w = self.weights.get(active, j);
            let payload: Vec<f64> = fed.iter().map(|v| w * v).collect();
            let local = self.graph.local_index(j, active).expect("symmetric neighborhoods");
            self.cliques[j].update(local, &payload)?;
            sent.push((j, payload));
        }
        let rec = StepRecord {
            t: self.global_t,
            active,
            fetched,
            prediction: x,
            raw_prediction: raw,
            loss_value,
            gradient: g,
            sent,
        };
        self.global_t += 1;
        Ok(rec)
    }

    pub fn step(&mut self, acts: &mut Activations, source: &mut dyn LossSource) -> Result<StepRecord> {
        let t = self.global_t;
        let active = acts.next_active()?;
        let loss = source.next_loss(t, active)?;
        self.step_with(active, &loss)
    }

    pub fn run(
        &mut self,
        acts: &mut Activations,
        source: &mut dyn LossSource,
        t_len: usize,
    ) -> Result<Vec<StepRecord>> {
        (0..t_len).map(|_| self.step(acts, source)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) struct Played {
    pub x: Vec<f64>,
    pub loss_value: f64,
    pub g: Vec<f64>,
    pub fed: Vec<f64>,
}

pub(crate) fn max_incoming(g: &GraphTopology, w: &WeightMatrix, j: usize) -> f64 {
    let m = g.neighborhood(j).iter().map(|&i| w.get(i, j)).fold(0.0, f64::max);
    nonzero(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::learner::{HedgeCliqueState, Projection};
    use crate::rng;
    use crate::stream::{LossKind, RecordedStream};
    use rand::Rng;

    fn random_linear(n: usize, d: usize, t_len: usize, seed: u64) -> RecordedStream {
        let mut r = rng::seeded(seed);
        let actives = (0..t_len).map(|_| r.random_range(0..n)).collect();
        let vectors = (0..t_len)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
                crate::loss::project_unit_ball(&v).into_vec()
            })
            .collect();
        RecordedStream::new(LossKind::Linear, d, actives, vectors).unwrap()
    }

    fn uniform_net(g: GraphTopology, d: usize) -> NetworkState {
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        NetworkState::with_mode(g, w, BaseLearner::hedge(), d, &BetaMode::Adversarial, None).unwrap()
    }

    #[test]
    fn first_step_predicts_zero() {
        let g = erdos_renyi(4, 0.5, 1).unwrap();
        let mut net = uniform_net(g, 2);
        let rec = net.step_with(2, &Loss::Quadratic { center: vec![0.3, 0.4] }).unwrap();
        assert_eq!(rec.prediction, vec![0.0, 0.0]);
        assert!((rec.loss_value - 0.125).abs() < 1e-15);
    }

    #[test]
    fn single_agent_matches_plain_clique() {
        let g = GraphTopology::empty(1).unwrap();
        let mut net = uniform_net(g, 2);
        let mut solo = HedgeCliqueState::new(1, 2, 1.0, Projection::ABall).unwrap();
        let stream = random_linear(1, 2, 50, 3);
        for t in 0..50 {
            let rec = net.step_with(0, &stream.loss(t)).unwrap();
            assert_eq!(rec.prediction, solo.predict(0).unwrap());
            solo.update(0, stream.vector(t)).unwrap();
            assert_eq!(rec.fetched.len(), 1);
            assert_eq!(rec.sent[0].0, 0);
        }
    }

    #[test]
    fn messages_stay_on_incident_edges() {
        for seed in 0..10 {
            let g = erdos_renyi(7, 0.4, seed).unwrap();
            let stream = random_linear(7, 3, 200, seed);
            let mut net = uniform_net(g.clone(), 3);
            let mut acts = ActivationSchedule::Adversarial { sequence: stream.actives().to_vec() }.start(7).unwrap();
            let recs = net.run(&mut acts, &mut stream.replay(), 200).unwrap();
            for r in &recs {
                for (j, _) in r.fetched.iter().chain(&r.sent) {
                    assert!(*j == r.active || g.is_adjacent(r.active, *j));
                }
                let mut x = vec![0.0; 3];
                for (j, row) in &r.fetched {
                    let w = net.weights().get(r.active, *j);
                    for k in 0..3 {
                        x[k] += w * row[k];
                    }
                }
                assert_eq!(x, r.prediction);
            }
            for j in 0..7 {
                let expected = recs.iter().filter(|r| g.neighborhood(j).contains(&r.active)).count();
                assert_eq!(net.clique(j).local_t(), expected as u64);
            }
        }
    }

    #[test]
    fn empty_run_and_replay_determinism() {
        let g = erdos_renyi(5, 0.6, 2).unwrap();
        let stream = random_linear(5, 2, 100, 9);
        let sched = ActivationSchedule::Adversarial { sequence: stream.actives().to_vec() };
        let mut a = uniform_net(g.clone(), 2);
        assert!(a.run(&mut sched.start(5).unwrap(), &mut stream.replay(), 0).unwrap().is_empty());
        let ra = a.run(&mut sched.start(5).unwrap(), &mut stream.replay(), 100).unwrap();
        let mut b = uniform_net(g, 2);
        let rb = b.run(&mut sched.start(5).unwrap(), &mut stream.replay(), 100).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn snapshot_resume_is_bit_identical() {
        let g = erdos_renyi(5, 0.6, 4).unwrap();
        let stream = random_linear(5, 2, 80, 5);
        let mut full = uniform_net(g.clone(), 2);
        let mut half = uniform_net(g, 2);
        for t in 0..40 {
            full.step_with(stream.actives()[t], &stream.loss(t)).unwrap();
            half.step_with(stream.actives()[t], &stream.loss(t)).unwrap();
        }
        let mut resumed = NetworkState::from_json(&half.to_json().unwrap()).unwrap();
        for t in 40..80 {
            let a = full.step_with(stream.actives()[t], &stream.loss(t)).unwrap();
            let b = resumed.step_with(stream.actives()[t], &stream.loss(t)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn beta_scale_rules() {
        let g = GraphTopology::path(3).unwrap();
        let q = [0.5, 0.25, 0.25];
        let w = make_weights(&g, WeightScheme::StochasticConditional, Some(&q), None).unwrap();
        let adv = adversarial_beta_scales(&g, &w);
        // clique 0 = {0, 1}: w_00 = 2/3, w_10 = 0.5/(0.5+0.25+0.25) = 0.5
        assert!((adv[0] - 2.0 / 3.0).abs() < 1e-15);
        let sto = stochastic_beta_scales(&g, &w, &q);
        let q0 = 0.75;
        let want = ((0.5 / q0) * (2.0f64 / 3.0).powi(2) + (0.25 / q0) * 0.25).sqrt();
        assert!((sto[0] - want).abs() < 1e-15);
        let zero =
            WeightMatrix::custom(&g, vec![vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(adversarial_beta_scales(&g, &zero)[0], 1.0);
    }
}
