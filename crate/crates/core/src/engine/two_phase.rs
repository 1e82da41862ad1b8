//! Unknown activation probabilities: every clique first observes `tau` local
//! rounds while predicting zero, estimates how often each member is active,
//! then starts a fresh learner with the estimated rate multiplier.

use super::{max_incoming, Activations, NetworkState, StepRecord};
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::stream::LossSource;

pub const DEFAULT_WARMUP_CONSTANT: f64 = 12.0;

/// `tau = ceil((c / q_min) ln(2 N^2 T))`; fails when `tau >= T`.
pub fn warmup_length(n_agents: usize, q_min: f64, horizon: usize, constant: f64) -> Result<u64> {
    if !(q_min > 0.0 && q_min <= 1.0) {
        return Err(Error::Config(format!("q_min lower bound must lie in (0, 1], got {q_min}")));
    }
    let nn = n_agents as f64;
    let tau = (constant / q_min * (2.0 * nn * nn * horizon as f64).ln()).ceil();
    if !(tau < horizon as f64) {
        return Err(Error::Config(format!("warm-up length {tau} is not below the horizon {horizon}")));
    }
    Ok(tau as u64)
}

/// `sqrt(sum_i pi_hat_ij w_ij^2)`, falling back to 1 when zero.
pub fn estimated_beta_scale(pi_hat: &[f64], incoming_weights: &[f64]) -> f64 {
    let s: f64 = pi_hat.iter().zip(incoming_weights).map(|(p, w)| p * w * w).sum();
    if s > 0.0 {
        s.sqrt()
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct TwoPhaseNetwork {
    net: NetworkState,
    tau: u64,
    counts: Vec<Vec<u64>>,
    clock: Vec<u64>,
    pi_hat: Vec<Option<Vec<f64>>>,
}

impl TwoPhaseNetwork {
    pub fn new(net: NetworkState, q_min_lower_bound: f64, horizon: usize, constant: f64) -> Result<Self> {
        let n = net.graph().n();
        let tau = warmup_length(n, q_min_lower_bound, horizon, constant)?;
        let counts = (0..n).map(|j| vec![0; net.graph().size(j)]).collect();
        Ok(Self { net, tau, counts, clock: vec![0; n], pi_hat: vec![None; n] })
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn network(&self) -> &NetworkState {
        &self.net
    }

    /// Frozen estimates `pi_hat_ij`, indexed by local position in `N_j`.
    pub fn estimates(&self, j: usize) -> Option<&[f64]> {
        self.pi_hat[j].as_deref()
    }

    pub fn warmed_up(&self, j: usize) -> bool {
        self.pi_hat[j].is_some()
    }

    pub fn step_with(&mut self, active: usize, loss: &Loss) -> Result<StepRecord> {
        let g = self.net.graph().clone();
        let d = self.net.d();
        let mut x = vec![0.0; d];
        let mut fetched = Vec::with_capacity(g.size(active));
        for &j in g.neighborhood(active) {
            let local = g.local_index(j, active).expect("symmetric neighborhoods");
            let row = if self.warmed_up(j) { self.net.clique(j).predict(local)? } else { vec![0.0; d] };
            let w = self.net.weights().get(active, j);
            for (a, r) in x.iter_mut().zip(&row) {
                *a += w * r;
            }
            fetched.push((j, row));
        }
        let played = self.net.play(&x, loss);
        let mut sent = Vec::with_capacity(fetched.len());
        for &j in g.neighborhood(active) {
            let w = self.net.weights().get(active, j);
            let payload: Vec<f64> = played.fed.iter().map(|v| w * v).collect();
            let local = g.local_index(j, active).expect("symmetric neighborhoods");
            if self.warmed_up(j) {
                self.net.clique_mut(j).update(local, &payload)?;
            } else {
                self.counts[j][local] += 1;
                self.clock[j] += 1;
                if self.clock[j] == self.tau {
                    self.freeze(j)?;
                }
            }
            sent.push((j, payload));
        }
        let rec = StepRecord {
            t: self.net.global_t,
            active,
            fetched,
            prediction: played.x,
            raw_prediction: x,
            loss_value: played.loss_value,
            gradient: played.g,
            sent,
        };
        self.net.global_t += 1;
        Ok(rec)
    }

    fn freeze(&mut self, j: usize) -> Result<()> {
        let g = self.net.graph().clone();
        let total = self.clock[j] as f64;
        let pi: Vec<f64> = self.counts[j].iter().map(|&c| c as f64 / total).collect();
        let incoming: Vec<f64> = g.neighborhood(j).iter().map(|&i| self.net.weights().get(i, j)).collect();
        let scale = estimated_beta_scale(&pi, &incoming);
        let fresh =
            self.net.learner().build(g.size(j), self.net.d(), scale, max_incoming(&g, self.net.weights(), j))?;
        *self.net.clique_mut(j) = fresh;
        self.pi_hat[j] = Some(pi);
        Ok(())
    }

    pub fn step(&mut self, acts: &mut Activations, source: &mut dyn LossSource) -> Result<StepRecord> {
        let t = self.net.global_t;
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{make_weights, ActivationSchedule, BetaMode, WeightScheme};
    use crate::graph::GraphTopology;
    use crate::learner::BaseLearner;
    use crate::stream::{LossKind, TaskLossStream};
    use crate::variance::TaskMatrix;

    fn net(g: GraphTopology) -> NetworkState {
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        NetworkState::with_mode(g, w, BaseLearner::hedge(), 2, &BetaMode::Adversarial, None).unwrap()
    }

    #[test]
    fn warmup_formula_and_errors() {
        let tau = warmup_length(8, 0.125, 10_000, 12.0).unwrap();
        assert_eq!(tau, (96.0 * (128.0f64 * 10_000.0).ln()).ceil() as u64);
        assert!(warmup_length(8, 0.125, 500, 12.0).is_err());
        assert!(warmup_length(8, 0.0, 500, 12.0).is_err());
    }

    #[test]
    fn single_agent_estimate_is_one() {
        let g = GraphTopology::empty(1).unwrap();
        let mut tp = TwoPhaseNetwork::new(net(g), 1.0, 1000, 12.0).unwrap();
        let tau = tp.tau() as usize;
        let u = TaskMatrix::new(vec![vec![0.5, 0.0]]).unwrap();
        let mut src = TaskLossStream::new(u, LossKind::Linear, 0.0, crate::rng::seeded(1));
        let mut acts = ActivationSchedule::uniform(1, 2).start(1).unwrap();
        let recs = tp.run(&mut acts, &mut src, tau + 5).unwrap();
        assert!(recs[..tau].iter().all(|r| r.prediction == vec![0.0, 0.0]));
        assert_eq!(tp.estimates(0).unwrap(), &[1.0]);
        assert_eq!(tp.network().clique(0).local_t(), 5);
        assert_ne!(recs[tau + 1].prediction, vec![0.0, 0.0]);
    }

    #[test]
    fn estimates_partition_the_local_clock() {
        let g = GraphTopology::complete(8).unwrap();
        let n = 8;
        let horizon = 10_000;
        let mut tp = TwoPhaseNetwork::new(net(g), 1.0 / n as f64, horizon, 12.0).unwrap();
        let u = TaskMatrix::zeros(n, 2);
        let mut src = TaskLossStream::new(u, LossKind::Linear, 0.1, crate::rng::seeded(3));
        let mut acts = ActivationSchedule::uniform(n, 4).start(n).unwrap();
        tp.run(&mut acts, &mut src, tp.tau() as usize).unwrap();
        for j in 0..n {
            let pi = tp.estimates(j).unwrap();
            assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert_eq!(tp.counts[j].iter().sum::<u64>(), tp.tau());
        }
    }
}
