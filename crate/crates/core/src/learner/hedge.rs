//! MT-FTRL with Hedge over the variance grid `{1/n, 2/n, ..., 1}`.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_beta_scale, check_dim, check_index, exact, InteractionMatrix, Projection, Theta};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeCliqueState {
    n: usize,
    d: usize,
    theta: Theta,
    expert_cumloss: Vec<f64>,
    local_t: u64,
    beta_scale: f64,
    projection: Projection,
}

impl HedgeCliqueState {
    pub fn new(n: usize, d: usize, beta_scale: f64, projection: Projection) -> Result<Self> {
        InteractionMatrix::new(n)?;
        check_beta_scale(beta_scale)?;
        Ok(Self { n, d, theta: Theta::new(n, d), expert_cumloss: vec![0.0; n], local_t: 0, beta_scale, projection })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn local_t(&self) -> u64 {
        self.local_t
    }

    pub fn beta_scale(&self) -> f64 {
        self.beta_scale
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    /// Row-major `n x d`.
    pub fn theta(&self) -> &[f64] {
        self.theta.data()
    }

    pub fn expert_cumloss(&self) -> &[f64] {
        &self.expert_cumloss
    }

    pub fn grid(&self) -> Vec<f64> {
        (1..=self.n).map(|k| k as f64 / self.n as f64).collect()
    }

    /// `beta_scale * sqrt(1 + local_t)`.
    pub fn beta(&self) -> f64 {
        self.beta_scale * (1.0 + self.local_t as f64).sqrt()
    }

    pub fn eta(&self, xi: f64) -> f64 {
        let n = self.n as f64;
        n / self.beta() * (1.0 + xi * (n - 1.0)).sqrt()
    }

    pub fn radius(&self, xi: f64) -> f64 {
        let n = self.n as f64;
        (n * (1.0 + xi * (n - 1.0))).sqrt()
    }

    /// Per grid point, the factor `c` with `X^(xi) = -c A^-1 theta` in A-ball mode.
    fn ball_factors(&self) -> Vec<f64> {
        let q = self.theta.inverse_quad();
        self.grid()
            .into_iter()
            .map(|xi| {
                let eta = self.eta(xi);
                let norm = eta * q.sqrt();
                let r = self.radius(xi);
                if norm > r {
                    r / q.sqrt()
                } else {
                    eta
                }
            })
            .collect()
    }

    /// Full expert matrix `X^(xi_k)`, `n x d`.
    pub fn expert_matrix(&self, k: usize) -> Result<DMatrix<f64>> {
        check_index(k, self.n)?;
        let xi = (k + 1) as f64 / self.n as f64;
        let a = InteractionMatrix::new(self.n)?;
        let unconstrained = a.apply_inverse(&self.theta.to_matrix()) * (-self.eta(xi));
        match self.projection {
            Projection::ABall => {
                let norm = a.norm_sq(&unconstrained).sqrt();
                let r = self.radius(xi);
                Ok(if norm > r { unconstrained * (r / norm) } else { unconstrained })
            }
            Projection::Exact { max_sweeps, tol } => Ok(exact::project_exact(&unconstrained, xi, max_sweeps, tol).0),
        }
    }

    /// Row `local_index` of every expert, in grid order.
    pub fn expert_rows(&self, local_index: usize) -> Result<Vec<Vec<f64>>> {
        check_index(local_index, self.n)?;
        match self.projection {
            Projection::ABall => {
                let base = self.theta.inverse_row(local_index);
                Ok(self.ball_factors().into_iter().map(|c| base.iter().map(|v| -c * v).collect()).collect())
            }
            Projection::Exact { .. } => {
                (0..self.n).map(|k| Ok(self.expert_matrix(k)?.row(local_index).iter().copied().collect())).collect()
            }
        }
    }

    /// Hedge weights `p ∝ exp(-(sqrt(ln n) / beta) * cumloss)`.
    pub fn weights(&self) -> Vec<f64> {
        let rate = (self.n as f64).ln().sqrt() / self.beta();
        let min = self.expert_cumloss.iter().copied().fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = self.expert_cumloss.iter().map(|l| (-rate * (l - min)).exp()).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / z).collect()
    }

    pub fn predict(&self, local_index: usize) -> Result<Vec<f64>> {
        check_index(local_index, self.n)?;
        let p = self.weights();
        if self.projection == Projection::ABall {
            let m: f64 = p.iter().zip(self.ball_factors()).map(|(p, c)| p * c).sum();
            return Ok(self.theta.inverse_row(local_index).iter().map(|v| -m * v).collect());
        }
        let rows = self.expert_rows(local_index)?;
        let mut out = vec![0.0; self.d];
        for (pk, row) in p.iter().zip(&rows) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += pk * v;
            }
        }
        Ok(out)
    }

    /// Feeds `<weighted_gradient, .>` at row `local_index`. Expert losses are
    /// scored with the experts that produced this round's prediction.
    pub fn update(&mut self, local_index: usize, weighted_gradient: &[f64]) -> Result<()> {
        check_index(local_index, self.n)?;
        check_dim(weighted_gradient, self.d)?;
        let bound = self.beta_scale * (1.0 + self.local_t as f64).sqrt();
        let gnorm = weighted_gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm > bound && gnorm > 1.0 {
            warn!("weighted gradient norm {gnorm:.3} exceeds the rate bound {bound:.3}");
        }
        let rows = self.expert_rows(local_index)?;
        for (acc, row) in self.expert_cumloss.iter_mut().zip(&rows) {
            *acc += crate::loss::dot(weighted_gradient, row);
        }
        self.theta.add_to_row(local_index, weighted_gradient);
        self.local_t += 1;
        Ok(())
    }

    /// Installs a sanitized row and sanitized expert losses in place of the
    /// raw accumulation; advances the local clock.
    pub(crate) fn apply_sanitized(&mut self, local_index: usize, row: &[f64], cumloss: &[f64]) -> Result<()> {
        check_index(local_index, self.n)?;
        check_dim(row, self.d)?;
        check_dim(cumloss, self.n)?;
        self.theta.set_row(local_index, row);
        self.expert_cumloss.copy_from_slice(cumloss);
        self.local_t += 1;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
