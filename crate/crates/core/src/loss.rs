//! Quadratic and linear losses on the unit ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variance::{dist_sq, norm, TaskMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Loss {
    /// `0.5 * ||x - center||^2`
    Quadratic { center: Vec<f64> },
    /// `<gradient, x>`
    Linear { gradient: Vec<f64> },
}

impl Loss {
    pub fn dim(&self) -> usize {
        match self {
            Loss::Quadratic { center } => center.len(),
            Loss::Linear { gradient } => gradient.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Loss::Quadratic { center } => 0.5 * dist_sq(x, center),
            Loss::Linear { gradient } => dot(gradient, x),
        }
    }

    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Loss::Quadratic { center } => x.iter().zip(center).map(|(a, b)| a - b).collect(),
            Loss::Linear { gradient } => gradient.clone(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Loss::Linear { .. })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point of the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    x: Vec<f64>,
}

impl DecisionPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        let n = norm(&x);
        if !(n <= 1.0 + 1e-9) {
            return Err(Error::Config(format!("point of norm {n} outside the unit ball")));
        }
        Ok(Self { x })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }
}

pub fn project_unit_ball(x: &[f64]) -> DecisionPoint {
    let n = norm(x);
    let x = if n > 1.0 { x.iter().map(|v| v / n).collect() } else { x.to_vec() };
    DecisionPoint { x }
}

/// Gradient to feed an unconstrained learner whose raw point `raw` was played
/// as `project_unit_ball(raw)` and received gradient `g` there.
///
/// When `raw` lies outside the ball and `g` points back inward, the learner
/// gets `g + |g| raw / |raw|`; otherwise `g` itself. For every `u` in the unit
/// ball, `<g, played - u> <= <surrogate, raw - u>`, and the surrogate is at
/// most `sqrt(2) |g|` long.
pub fn feasible_surrogate(raw: &[f64], g: &[f64]) -> Vec<f64> {
    let n = norm(raw);
    if n <= 1.0 || dot(g, raw) >= 0.0 {
        return g.to_vec();
    }
    let gn = norm(g);
    g.iter().zip(raw).map(|(a, r)| a + gn * r / n).collect()
}

/// Sufficient statistics for the hindsight minimizer of one agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HindsightStats {
    quadratic_count: usize,
    center_sum: Vec<f64>,
    linear_count: usize,
    gradient_sum: Vec<f64>,
}

impl HindsightStats {
    pub fn push(&mut self, loss: &Loss) {
        let (count, sum, v) = match loss {
            Loss::Quadratic { center } => (&mut self.quadratic_count, &mut self.center_sum, center),
            Loss::Linear { gradient } => (&mut self.linear_count, &mut self.gradient_sum, gradient),
        };
        if sum.is_empty() {
            sum.resize(v.len(), 0.0);
        }
        for (acc, x) in sum.iter_mut().zip(v) {
            *acc += x;
        }
        *count += 1;
    }

    pub fn minimizer(&self, d: usize) -> Result<Vec<f64>> {
        match (self.quadratic_count, self.linear_count) {
            (0, 0) => Ok(vec![0.0; d]),
            (q, 0) => {
                let mean: Vec<f64> = self.center_sum.iter().map(|v| v / q as f64).collect();
                Ok(project_unit_ball(&mean).into_vec())
            }
            (0, _) => {
                let n = norm(&self.gradient_sum);
                if n == 0.0 {
                    Ok(vec![0.0; d])
                } else {
                    Ok(self.gradient_sum.iter().map(|v| -v / n).collect())
                }
            }
            _ => Err(Error::Unsupported("mixed quadratic and linear losses for one agent".into())),
        }
    }
}

/// Per-agent minimizer over the unit ball of the summed losses.
pub fn best_in_hindsight(losses: &[Vec<Loss>], d: usize) -> Result<TaskMatrix> {
    let rows = losses
        .iter()
        .map(|ls| {
            let mut st = HindsightStats::default();
            for l in ls {
                if l.dim() != d {
                    return Err(Error::Dimension { expected: d, got: l.dim() });
                }
                st.push(l);
            }
            st.minimizer(d)
        })
        .collect::<Result<Vec<_>>>()?;
    TaskMatrix::new(rows)
}
