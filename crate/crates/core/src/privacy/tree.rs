//! Binary-counter aggregation with noise completion.
//!
//! Node `i` holds the exact sum of a dyadic block of `2^i` consecutive
//! values. The prefix `[1, t]` is covered by the nodes at the set bits of
//! `t`; each carries one Laplace draw fixed when the node closes. Every
//! release then adds fresh draws until it holds exactly `levels` noise
//! terms, so the release noise has the same law at every `t`.

use serde::Serialize;

use super::laplace::laplace_sample;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// `ceil(log2 T) + 1`.
pub fn level_count(horizon: usize) -> usize {
    let ceil_log = if horizon <= 1 { 0 } else { (usize::BITS - (horizon - 1).leading_zeros()) as usize };
    ceil_log + 1
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregationTree {
    horizon: usize,
    levels: usize,
    dim: usize,
    scale: f64,
    t: usize,
    exact: Vec<Vec<f64>>,
    noisy: Vec<Vec<f64>>,
    #[serde(skip)]
    rng: StreamRng,
    last_noise_terms: usize,
}

impl AggregationTree {
    pub fn new(horizon: usize, dim: usize, scale: f64, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("aggregation horizon must be at least 1".into()));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Config(format!("noise scale must be finite and >= 0, got {scale}")));
        }
        let levels = level_count(horizon);
        Ok(Self {
            horizon,
            levels,
            dim,
            scale,
            t: 0,
            exact: vec![Vec::new(); levels],
            noisy: vec![Vec::new(); levels],
            rng: rng::seeded(seed),
            last_noise_terms: 0,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    /// Laplace terms in the most recent release.
    pub fn last_noise_terms(&self) -> usize {
        self.last_noise_terms
    }

    /// Exact sums of the live dyadic nodes, `(level, sum)` ascending.
    pub fn node_sums(&self) -> Vec<(usize, Vec<f64>)> {
        (0..self.levels).filter(|&i| self.t >> i & 1 == 1).map(|i| (i, self.exact[i].clone())).collect()
    }

    /// Appends `value` and returns the sanitized prefix sum.
    pub fn release(&mut self, value: &[f64]) -> Result<Vec<f64>> {
        if value.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: value.len() });
        }
        if self.t >= self.horizon {
            return Err(Error::Capacity(self.horizon));
        }
        self.t += 1;
        let t = self.t;
        let top = t.trailing_zeros() as usize;
        let mut node = value.to_vec();
        for j in 0..top {
            for (a, b) in node.iter_mut().zip(&self.exact[j]) {
                *a += b;
            }
            self.exact[j].clear();
            self.noisy[j].clear();
        }
        let noise = laplace_sample(self.dim, self.scale, &mut self.rng);
        self.noisy[top] = node.iter().zip(&noise).map(|(a, b)| a + b).collect();
        self.exact[top] = node;

        let mut out = vec![0.0; self.dim];
        let mut terms = 0;
        for i in 0..self.levels {
            if t >> i & 1 == 1 {
                for (o, v) in out.iter_mut().zip(&self.noisy[i]) {
                    *o += v;
                }
                terms += 1;
            }
        }
        while terms < self.levels {
            let extra = laplace_sample(self.dim, self.scale, &mut self.rng);
            for (o, v) in out.iter_mut().zip(&extra) {
                *o += v;
            }
            terms += 1;
        }
        self.last_noise_terms = terms;
        Ok(out)
    }
}
