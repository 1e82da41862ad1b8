use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::weights::validate_distribution;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Who is active at each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationSchedule {
    /// Fixed sequence chosen in advance.
    Adversarial { sequence: Vec<usize> },
    /// `i_t` drawn i.i.d. from `q`.
    Stochastic { q: Vec<f64>, seed: u64 },
    /// Cycles through `order` forever.
    RoundRobin { order: Vec<usize> },
}

impl ActivationSchedule {
    pub fn uniform(n: usize, seed: u64) -> Self {
        ActivationSchedule::Stochastic { q: vec![1.0 / n as f64; n], seed }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let check = |seq: &[usize]| match seq.iter().find(|&&i| i >= n) {
            Some(&i) => Err(Error::Index { index: i, len: n }),
            None => Ok(()),
        };
        match self {
            ActivationSchedule::Adversarial { sequence } => check(sequence),
            ActivationSchedule::RoundRobin { order } => {
                if order.is_empty() {
                    return Err(Error::Config("round-robin order is empty".into()));
                }
                check(order)
            }
            ActivationSchedule::Stochastic { q, .. } => validate_distribution(q, n),
        }
    }

    /// Known activation probabilities, if the schedule is stochastic.
    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            ActivationSchedule::Stochastic { q, .. } => Some(q),
            _ => None,
        }
    }

    pub fn start(&self, n: usize) -> Result<Activations> {
        self.validate(n)?;
        let sampler = match self {
            ActivationSchedule::Stochastic { q, seed } => {
                Some((WeightedIndex::new(q).map_err(|e| Error::Config(e.to_string()))?, rng::seeded(*seed)))
            }
            _ => None,
        };
        Ok(Activations { schedule: self.clone(), sampler, pos: 0 })
    }
}

/// Running cursor over an activation schedule.
#[derive(Debug, Clone)]
pub struct Activations {
    schedule: ActivationSchedule,
    sampler: Option<(WeightedIndex<f64>, StreamRng)>,
    pos: usize,
}

impl Activations {
    pub fn next_active(&mut self) -> Result<usize> {
        let t = self.pos;
        let i = match &self.schedule {
            ActivationSchedule::Adversarial { sequence } => *sequence.get(t).ok_or(Error::ScheduleExhausted(t))?,
            ActivationSchedule::RoundRobin { order } => order[t % order.len()],
            ActivationSchedule::Stochastic { .. } => {
                let (dist, rng) = self.sampler.as_mut().expect("sampler built for stochastic schedules");
                dist.sample(rng)
            }
        };
        self.pos += 1;
        Ok(i)
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adversarial_exhausts() {
        let mut a = ActivationSchedule::Adversarial { sequence: vec![1, 0] }.start(2).unwrap();
        assert_eq!(a.next_active().unwrap(), 1);
        assert_eq!(a.next_active().unwrap(), 0);
        assert!(matches!(a.next_active(), Err(Error::ScheduleExhausted(2))));
        assert!(ActivationSchedule::Adversarial { sequence: vec![2] }.start(2).is_err());
    }

    #[test]
    fn round_robin_cycles() {
        let mut a = ActivationSchedule::RoundRobin { order: vec![2, 0] }.start(3).unwrap();
        let seq: Vec<usize> = (0..5).map(|_| a.next_active().unwrap()).collect();
        assert_eq!(seq, vec![2, 0, 2, 0, 2]);
    }

    #[test]
    fn stochastic_frequencies_and_determinism() {
        let s = ActivationSchedule::Stochastic { q: vec![0.5, 0.25, 0.25], seed: 4 };
        let mut a = s.start(3).unwrap();
        let mut counts = [0usize; 3];
        let draws: Vec<usize> = (0..40_000).map(|_| a.next_active().unwrap()).collect();
        for &i in &draws {
            counts[i] += 1;
        }
        assert!((counts[0] as f64 / 40_000.0 - 0.5).abs() < 0.01);
        let mut b = s.start(3).unwrap();
        assert!(draws.iter().all(|&i| i == b.next_active().unwrap()));
        assert!(ActivationSchedule::Stochastic { q: vec![0.5, 0.6], seed: 0 }.start(2).is_err());
    }
}
