//! Task matrices and their dispersion statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;

const BALL_TOL: f64 = 1e-9;

/// `N x d` comparator matrix whose rows lie in the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMatrix {
    d: usize,
    rows: Vec<Vec<f64>>,
}

impl TaskMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Dimension { expected: d, got: r.len() });
            }
            let norm = norm(r);
            if !(norm <= 1.0 + BALL_TOL) {
                return Err(Error::Config(format!("row {i} has norm {norm} outside the unit ball")));
            }
        }
        Ok(Self { d, rows })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self { d, rows: vec![vec![0.0; d]; n] }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Unbiased variance `1/(m-1) * sum ||x_k - mean||^2` of the selected rows;
/// zero for fewer than two rows.
pub fn row_variance<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> f64 {
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    let m = rows.len();
    if m < 2 {
        return 0.0;
    }
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (acc, v) in mean.iter_mut().zip(r.iter()) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    rows.iter().map(|r| dist_sq(r, &mean)).sum::<f64>() / (m - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub sigma_global: f64,
    pub sigma_local: Vec<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Mean of the local variances.
    pub sigma_bar: f64,
    /// Mean of the local standard deviations, reported alongside `sigma_bar`.
    pub sigma_bar_std: f64,
    pub delta_sq: f64,
}

pub fn variance_profile(u: &TaskMatrix, g: &GraphTopology) -> Result<VarianceProfile> {
    if u.n() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: u.n() });
    }
    let sigma_global = row_variance(u.rows().iter().map(Vec::as_slice));
    let sigma_local: Vec<f64> = (0..g.n()).map(|j| row_variance(g.neighborhood(j).iter().map(|&i| u.row(i)))).collect();
    let n = sigma_local.len() as f64;
    let delta_sq = g.edges().iter().map(|&(a, b)| dist_sq(u.row(a), u.row(b))).fold(0.0, f64::max);
    Ok(VarianceProfile {
        sigma_global,
        sigma_max: sigma_local.iter().copied().fold(0.0, f64::max),
        sigma_min: sigma_local.iter().copied().fold(f64::INFINITY, f64::min),
        sigma_bar: sigma_local.iter().sum::<f64>() / n,
        sigma_bar_std: sigma_local.iter().map(|v| v.sqrt()).sum::<f64>() / n,
        sigma_local,
        delta_sq,
    })
}
