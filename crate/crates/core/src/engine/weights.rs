use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w_ij = 1 / N_i` on `N_i`.
    Uniform,
    /// `w_ij = q_j / Q_i` with `Q_i = sum_{k in N_i} q_k`.
    StochasticConditional,
    /// One-hot on the dominating vertex each agent delegates to.
    Delegation,
    Custom,
}

/// Row-stochastic weights; row `i` is how agent `i` mixes its neighbors'
/// models, and `w_ij` also scales the gradient it sends to clique `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    scheme: WeightScheme,
    w: Vec<f64>,
}

const ROW_TOL: f64 = 1e-12;

impl WeightMatrix {
    pub fn custom(g: &GraphTopology, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::validated(g, WeightScheme::Custom, rows)
    }

    fn validated(g: &GraphTopology, scheme: WeightScheme, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = g.n();
        if rows.len() != n {
            return Err(Error::Dimension { expected: n, got: rows.len() });
        }
        let mut w = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Weights { row: i, msg: format!("entry {j} is {v}") });
                }
                if v != 0.0 && i != j && !g.is_adjacent(i, j) {
                    return Err(Error::Weights { row: i, msg: format!("weight on non-neighbor {j}") });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::Weights { row: i, msg: format!("sums to {sum}") });
            }
            w.extend(row);
        }
        Ok(Self { n, scheme, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }
}

pub fn make_weights(
    g: &GraphTopology,
    scheme: WeightScheme,
    q: Option<&[f64]>,
    dom_set: Option<&[usize]>,
) -> Result<WeightMatrix> {
    let n = g.n();
    let rows: Vec<Vec<f64>> = match scheme {
        WeightScheme::Uniform => (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                let share = 1.0 / g.size(i) as f64;
                for &j in g.neighborhood(i) {
                    r[j] = share;
                }
                r
            })
            .collect(),
        WeightScheme::StochasticConditional => {
            let q = q.ok_or_else(|| Error::Config("stochastic weights need q".into()))?;
            validate_distribution(q, n)?;
            (0..n)
                .map(|i| {
                    let big_q: f64 = g.neighborhood(i).iter().map(|&k| q[k]).sum();
                    let mut r = vec![0.0; n];
                    if big_q <= 0.0 {
                        // no neighbor is ever active: keep the row stochastic on self
                        r[i] = 1.0;
                        return r;
                    }
                    for &j in g.neighborhood(i) {
                        r[j] = q[j] / big_q;
                    }
                    r
                })
                .collect()
        }
        WeightScheme::Delegation => {
            let dom = dom_set.ok_or_else(|| Error::Config("delegation weights need a dominating set".into()))?;
            let target = g.dominating_delegation(dom)?;
            target
                .into_iter()
                .map(|j| {
                    let mut r = vec![0.0; n];
                    r[j] = 1.0;
                    r
                })
                .collect()
        }
        WeightScheme::Custom => return Err(Error::Config("custom weights are built with WeightMatrix::custom".into())),
    };
    WeightMatrix::validated(g, scheme, rows).map(|mut w| {
        w.scheme = scheme;
        w
    })
}

pub(crate) fn validate_distribution(q: &[f64], n: usize) -> Result<()> {
    if q.len() != n {
        return Err(Error::Dimension { expected: n, got: q.len() });
    }
    if q.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Config("activation probabilities must be finite and >= 0".into()));
    }
    let s: f64 = q.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("activation probabilities sum to {s}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;

    #[test]
    fn uniform_on_complete_graph() {
        let g = GraphTopology::complete(3).unwrap();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.get(i, j) - 1.0 / 3.0).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn stochastic_conditional_on_path() {
        let g = GraphTopology::path(3).unwrap();
        let q = [0.5, 0.25, 0.25];
        let w = make_weights(&g, WeightScheme::StochasticConditional, Some(&q), None).unwrap();
        assert!((w.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(w.get(0, 2), 0.0);
        assert!((w.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(make_weights(&g, WeightScheme::StochasticConditional, None, None).is_err());
    }

    #[test]
    fn delegation_is_one_hot() {
        let g = GraphTopology::path(3).unwrap();
        let w = make_weights(&g, WeightScheme::Delegation, None, Some(&[1])).unwrap();
        for i in 0..3 {
            assert_eq!(w.row(i), &[0.0, 1.0, 0.0]);
        }
        assert!(make_weights(&g, WeightScheme::Delegation, None, Some(&[2])).is_err());
        assert!(make_weights(&g, WeightScheme::Delegation, None, None).is_err());
    }

    #[test]
    fn custom_rows_are_validated() {
        let g = GraphTopology::path(3).unwrap();
        assert!(WeightMatrix::custom(&g, vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).is_err());
        assert!(WeightMatrix::custom(&g, vec![vec![0.5, 0.4, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).is_err());
        let w = WeightMatrix::custom(&g, vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.2, 0.8]]).unwrap();
        assert_eq!(w.scheme(), WeightScheme::Custom);
    }

    #[test]
    fn built_in_rows_are_stochastic() {
        for seed in 0..50 {
            let g = erdos_renyi(9, 0.4, seed).unwrap();
            let raw: Vec<f64> = (0..9).map(|i| 1.0 + i as f64).collect();
            let s: f64 = raw.iter().sum();
            let q: Vec<f64> = raw.iter().map(|v| v / s).collect();
            for scheme in [WeightScheme::Uniform, WeightScheme::StochasticConditional] {
                let w = make_weights(&g, scheme, Some(&q), None).unwrap();
                for i in 0..9 {
                    assert!((w.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
