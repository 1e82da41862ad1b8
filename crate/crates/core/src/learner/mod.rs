//! Clique-level base learners.
//!
//! A clique of `n` agents shares an `n x d` model matrix. FTRL with the
//! regularizer `0.5 ||X||_A^2`, `A = (1+n) I - 1 1^T`, couples the rows so a
//! gradient received by one member moves every member's model.

mod exact;
mod hedge;
mod kt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exact::{project_ball_product, project_exact, project_sigma_cap, ExactReport};
pub use hedge::HedgeCliqueState;
pub use kt::KtCliqueState;

/// The matrix `A = (1+n) I - 1 1^T` and its inverse `(I + 1 1^T)/(n+1)`,
/// never stored densely on the hot path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionMatrix {
    n: usize,
}

impl InteractionMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("clique size must be at least 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.n as f64
        } else {
            -1.0
        }
    }

    pub fn inverse_entry(&self, i: usize, j: usize) -> f64 {
        let d = if i == j { 2.0 } else { 1.0 };
        d / (self.n as f64 + 1.0)
    }

    pub fn materialize(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    pub fn materialize_inverse(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.inverse_entry(i, j))
    }

    /// `A X` for an `n x d` matrix.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let s = x.row_sum();
        let mut out = x * (self.n as f64 + 1.0);
        for mut r in out.row_iter_mut() {
            r -= &s;
        }
        out
    }

    /// `A^-1 X` for an `n x d` matrix.
    pub fn apply_inverse(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let s = x.row_sum();
        let mut out = x.clone();
        for mut r in out.row_iter_mut() {
            r += &s;
        }
        out / (self.n as f64 + 1.0)
    }

    /// `<X, Y>_A = tr(X^T A Y)`.
    pub fn inner(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        (self.n as f64 + 1.0) * x.dot(y) - x.row_sum().dot(&y.row_sum())
    }

    pub fn norm_sq(&self, x: &DMatrix<f64>) -> f64 {
        self.inner(x, x)
    }
}

/// Feasible set used by the Hedge experts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Projection {
    /// A-norm ball of radius `sqrt(n (1 + xi (n-1)))`; closed form.
    ABall,
    /// A-norm projection onto `{sigma^2(X) <= xi} ∩ {||X_i|| <= 1 for all i}`
    /// by Dykstra alternation. Intended for small instances.
    Exact { max_sweeps: usize, tol: f64 },
}

impl Projection {
    pub fn exact_default() -> Self {
        Projection::Exact { max_sweeps: 100, tol: 1e-9 }
    }
}

/// Which base learner every clique runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLearner {
    Hedge {
        projection: Projection,
    },
    /// `loss_lipschitz` bounds the norm of the gradients agents send before
    /// weighting, which for KT cliques are feasibility surrogates (see
    /// [`crate::loss::feasible_surrogate`]); the clique scales it by its
    /// largest incoming weight.
    Kt {
        loss_lipschitz: f64,
    },
}

impl BaseLearner {
    pub fn hedge() -> Self {
        BaseLearner::Hedge { projection: Projection::ABall }
    }

    pub fn build(&self, n: usize, d: usize, beta_scale: f64, max_weight: f64) -> Result<CliqueState> {
        Ok(match *self {
            BaseLearner::Hedge { projection } => {
                CliqueState::Hedge(HedgeCliqueState::new(n, d, beta_scale, projection)?)
            }
            BaseLearner::Kt { loss_lipschitz } => {
                CliqueState::Kt(KtCliqueState::new(n, d, beta_scale, loss_lipschitz * max_weight)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CliqueState {
    Hedge(HedgeCliqueState),
    Kt(KtCliqueState),
}

impl CliqueState {
    pub fn n(&self) -> usize {
        match self {
            CliqueState::Hedge(s) => s.n(),
            CliqueState::Kt(s) => s.n(),
        }
    }

    pub fn local_t(&self) -> u64 {
        match self {
            CliqueState::Hedge(s) => s.local_t(),
            CliqueState::Kt(s) => s.local_t(),
        }
    }

    pub fn theta(&self) -> &[f64] {
        match self {
            CliqueState::Hedge(s) => s.theta(),
            CliqueState::Kt(s) => s.theta(),
        }
    }

    pub fn beta_scale(&self) -> f64 {
        match self {
            CliqueState::Hedge(s) => s.beta_scale(),
            CliqueState::Kt(s) => s.beta_scale(),
        }
    }

    pub fn predict(&self, local_index: usize) -> Result<Vec<f64>> {
        match self {
            CliqueState::Hedge(s) => s.predict(local_index),
            CliqueState::Kt(s) => s.predict(local_index),
        }
    }

    pub fn update(&mut self, local_index: usize, weighted_gradient: &[f64]) -> Result<()> {
        match self {
            CliqueState::Hedge(s) => s.update(local_index, weighted_gradient),
            CliqueState::Kt(s) => s.update(local_index, weighted_gradient),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Shared accumulator for the cumulative weighted-gradient matrix.
///
/// Column sums and per-row squared norms are cached so a single row of
/// `A^-1 theta` and `tr(theta^T A^-1 theta)` cost `O(n + d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Theta {
    n: usize,
    d: usize,
    data: Vec<f64>,
    col_sum: Vec<f64>,
    row_sq: Vec<f64>,
}

impl Theta {
    pub(crate) fn new(n: usize, d: usize) -> Self {
        Self { n, d, data: vec![0.0; n * d], col_sum: vec![0.0; d], row_sq: vec![0.0; n] }
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn add_to_row(&mut self, i: usize, v: &[f64]) {
        let d = self.d;
        let row = &mut self.data[i * d..(i + 1) * d];
        for ((r, s), x) in row.iter_mut().zip(self.col_sum.iter_mut()).zip(v) {
            *r += x;
            *s += x;
        }
        self.row_sq[i] = row.iter().map(|x| x * x).sum();
    }

    pub(crate) fn set_row(&mut self, i: usize, v: &[f64]) {
        let d = self.d;
        self.data[i * d..(i + 1) * d].copy_from_slice(v);
        self.row_sq[i] = v.iter().map(|x| x * x).sum();
        for k in 0..d {
            self.col_sum[k] = (0..self.n).map(|r| self.data[r * d + k]).sum();
        }
    }

    /// `tr(theta^T A^-1 theta) = (||theta||_F^2 + ||1^T theta||^2) / (n+1)`.
    pub(crate) fn inverse_quad(&self) -> f64 {
        let f: f64 = self.row_sq.iter().sum();
        let s: f64 = self.col_sum.iter().map(|x| x * x).sum();
        (f + s) / (self.n as f64 + 1.0)
    }

    /// Row `i` of `A^-1 theta`.
    pub(crate) fn inverse_row(&self, i: usize) -> Vec<f64> {
        let c = 1.0 / (self.n as f64 + 1.0);
        self.row(i).iter().zip(&self.col_sum).map(|(a, s)| (a + s) * c).collect()
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.data)
    }
}

pub(crate) fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::Index { index: i, len: n });
    }
    Ok(())
}

pub(crate) fn check_dim(v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::Dimension { expected: d, got: v.len() });
    }
    Ok(())
}

pub(crate) fn check_beta_scale(beta_scale: f64) -> Result<()> {
    if !(beta_scale > 0.0) || !beta_scale.is_finite() {
        return Err(Error::State(format!("learning-rate scale must be positive, got {beta_scale}")));
    }
    Ok(())
}

/// Unbiased row variance used by the sigma cap: `sum ||X_i - mean||^2 / (n-1)`.
pub fn matrix_variance(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n < 2 {
        return 0.0;
    }
    let mean = x.row_mean();
    x.row_iter().map(|r| (r - &mean).norm_squared()).sum::<f64>() / (n - 1) as f64
}
