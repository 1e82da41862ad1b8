//! MT-FTRL with a Krichevsky-Trofimov bettor learning the model magnitude.
//!
//! The direction is FTRL on the unit A-ball with rate `sqrt(n) / beta`; the
//! prediction is `bet * direction`.

use serde::{Deserialize, Serialize};

use super::{check_beta_scale, check_dim, check_index, InteractionMatrix, Theta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KtCliqueState {
    n: usize,
    d: usize,
    theta: Theta,
    local_t: u64,
    beta_scale: f64,
    lipschitz: f64,
    sum_u: f64,
    sum_bet_u: f64,
    bet: f64,
    clamped: u64,
}

impl KtCliqueState {
    /// `lipschitz` bounds the norm of the gradients this clique is fed.
    pub fn new(n: usize, d: usize, beta_scale: f64, lipschitz: f64) -> Result<Self> {
        InteractionMatrix::new(n)?;
        check_beta_scale(beta_scale)?;
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::Config(format!("Lipschitz bound must be positive, got {lipschitz}")));
        }
        Ok(Self {
            n,
            d,
            theta: Theta::new(n, d),
            local_t: 0,
            beta_scale,
            lipschitz,
            sum_u: 0.0,
            sum_bet_u: 0.0,
            bet: 0.0,
            clamped: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn local_t(&self) -> u64 {
        self.local_t
    }

    pub fn beta_scale(&self) -> f64 {
        self.beta_scale
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn theta(&self) -> &[f64] {
        self.theta.data()
    }

    pub fn bet(&self) -> f64 {
        self.bet
    }

    /// `1 - sum_s b_s u_s`.
    pub fn wealth(&self) -> f64 {
        1.0 - self.sum_bet_u
    }

    /// Number of updates whose `u` had to be clamped into `[-1, 1]`.
    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn beta(&self) -> f64 {
        self.beta_scale * (1.0 + self.local_t as f64).sqrt()
    }

    /// Row `local_index` of the unit-A-ball direction.
    pub fn direction_row(&self, local_index: usize) -> Result<Vec<f64>> {
        check_index(local_index, self.n)?;
        let rate = (self.n as f64).sqrt() / self.beta();
        let norm = rate * self.theta.inverse_quad().sqrt();
        let c = if norm > 1.0 { rate / norm } else { rate };
        Ok(self.theta.inverse_row(local_index).into_iter().map(|v| -c * v).collect())
    }

    pub fn predict(&self, local_index: usize) -> Result<Vec<f64>> {
        let bet = self.bet;
        Ok(self.direction_row(local_index)?.into_iter().map(|v| bet * v).collect())
    }

    pub fn update(&mut self, local_index: usize, weighted_gradient: &[f64]) -> Result<()> {
        check_dim(weighted_gradient, self.d)?;
        let dir = self.direction_row(local_index)?;
        let scale = (self.n as f64).sqrt() / (std::f64::consts::SQRT_2 * self.lipschitz);
        let mut u = scale * crate::loss::dot(&dir, weighted_gradient);
        if u.abs() > 1.0 {
            u = u.clamp(-1.0, 1.0);
            self.clamped += 1;
        }
        self.sum_bet_u += self.bet * u;
        self.sum_u += u;
        self.theta.add_to_row(local_index, weighted_gradient);
        self.local_t += 1;
        let t = (self.local_t + 1) as f64;
        self.bet = -(self.sum_u / t) * (1.0 - self.sum_bet_u);
        Ok(())
    }

    /// Feeds a raw `u` to the bettor only; used to exercise the magnitude rule.
    pub fn feed_bettor(&mut self, u: f64) {
        self.sum_bet_u += self.bet * u;
        self.sum_u += u;
        self.local_t += 1;
        let t = (self.local_t + 1) as f64;
        self.bet = -(self.sum_u / t) * (1.0 - self.sum_bet_u);
    }
}
