use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::HindsightStats;
use crate::stream::RecordedStream;
use crate::variance::TaskMatrix;

/// Multitask regret of one trajectory against a fixed comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub actives: Vec<usize>,
    /// `l_t(x_t)`.
    pub losses: Vec<f64>,
    /// `l_t(x_t) - l_t(U_{i_t})`.
    pub terms: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Final regret of each agent over the steps it was active.
    pub per_agent: Vec<f64>,
}

impl RegretLedger {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Per-agent regret after the first `steps` steps.
    pub fn per_agent_at(&self, steps: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.per_agent.len()];
        for (&a, &r) in self.actives.iter().zip(&self.terms).take(steps) {
            out[a] += r;
        }
        out
    }
}

/// Scores `predictions` on `stream` against `comparator`.
pub fn multitask_regret(
    predictions: &[Vec<f64>],
    stream: &RecordedStream,
    comparator: &TaskMatrix,
) -> Result<RegretLedger> {
    if predictions.len() != stream.len() {
        return Err(Error::Dimension { expected: stream.len(), got: predictions.len() });
    }
    if comparator.d() != stream.d() {
        return Err(Error::Dimension { expected: stream.d(), got: comparator.d() });
    }
    let n = comparator.n();
    let mut per_agent = vec![0.0; n];
    let mut losses = Vec::with_capacity(stream.len());
    let mut terms = Vec::with_capacity(stream.len());
    let mut cumulative = Vec::with_capacity(stream.len());
    let mut acc = 0.0;
    for (t, x) in predictions.iter().enumerate() {
        if x.len() != stream.d() {
            return Err(Error::Dimension { expected: stream.d(), got: x.len() });
        }
        let a = stream.actives()[t];
        if a >= n {
            return Err(Error::Index { index: a, len: n });
        }
        let loss = stream.loss(t);
        let lx = loss.value(x);
        let r = lx - loss.value(comparator.row(a));
        acc += r;
        per_agent[a] += r;
        losses.push(lx);
        terms.push(r);
        cumulative.push(acc);
    }
    Ok(RegretLedger { actives: stream.actives().to_vec(), losses, terms, cumulative, per_agent })
}

/// Per-agent best fixed point in hindsight over the whole stream.
pub fn hindsight_comparator(stream: &RecordedStream, n: usize) -> Result<TaskMatrix> {
    let mut stats = vec![HindsightStats::default(); n];
    for t in 0..stream.len() {
        let a = stream.actives()[t];
        if a >= n {
            return Err(Error::Index { index: a, len: n });
        }
        stats[a].push(&stream.loss(t));
    }
    TaskMatrix::new(stats.iter().map(|s| s.minimizer(stream.d())).collect::<Result<Vec<_>>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::LossKind;

    #[test]
    fn comparator_predictions_have_zero_regret() {
        let u = TaskMatrix::new(vec![vec![0.5, 0.0], vec![0.0, -0.5]]).unwrap();
        let s = RecordedStream::new(
            LossKind::Quadratic,
            2,
            vec![0, 1, 1],
            vec![vec![0.4, 0.1], vec![0.0, 0.2], vec![1.0, 0.0]],
        )
        .unwrap();
        let preds: Vec<Vec<f64>> = s.actives().iter().map(|&a| u.row(a).to_vec()).collect();
        let l = multitask_regret(&preds, &s, &u).unwrap();
        assert!(l.cumulative.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_and_quadratic_examples() {
        let s = RecordedStream::new(LossKind::Linear, 2, vec![0], vec![vec![1.0, 0.0]]).unwrap();
        let u = TaskMatrix::new(vec![vec![-1.0, 0.0]]).unwrap();
        assert_eq!(multitask_regret(&[vec![0.0, 0.0]], &s, &u).unwrap().final_regret(), 1.0);

        let s = RecordedStream::new(LossKind::Quadratic, 2, vec![0], vec![vec![1.0, 0.0]]).unwrap();
        let u = TaskMatrix::new(vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(multitask_regret(&[vec![0.0, 0.0]], &s, &u).unwrap().final_regret(), 0.5);
    }

    #[test]
    fn per_agent_slices_add_up() {
        let s = RecordedStream::new(
            LossKind::Linear,
            1,
            vec![0, 2, 1, 0, 2, 2],
            vec![vec![1.0], vec![-0.5], vec![0.25], vec![-1.0], vec![0.3], vec![0.9]],
        )
        .unwrap();
        let u = hindsight_comparator(&s, 3).unwrap();
        let preds: Vec<Vec<f64>> = (0..6).map(|t| vec![(t as f64 * 0.37).sin()]).collect();
        let l = multitask_regret(&preds, &s, &u).unwrap();
        for t in 0..=6 {
            let total: f64 = l.per_agent_at(t).iter().sum();
            let expect = if t == 0 { 0.0 } else { l.cumulative[t - 1] };
            assert!((total - expect).abs() < 1e-12);
        }
        assert_eq!(l.per_agent, l.per_agent_at(6));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let s = RecordedStream::new(LossKind::Linear, 1, vec![0], vec![vec![1.0]]).unwrap();
        let u = TaskMatrix::zeros(1, 1);
        assert!(multitask_regret(&[], &s, &u).is_err());
    }
}
