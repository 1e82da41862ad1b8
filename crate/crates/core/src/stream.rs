//! Task-matrix sampling, loss generation and recorded loss streams.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::loss::{project_unit_ball, Loss};
use crate::rng::{self, StreamRng};
use crate::variance::TaskMatrix;

/// Draws columns from the centered Gaussian with covariance `(I + lambda L)^-1`.
///
/// The precision `M = I + lambda L` is factored once as `R R^T`; a draw is
/// `R^-T xi` with `xi` standard normal, whose covariance is `M^-1`.
#[derive(Debug, Clone)]
pub struct TaskSampler {
    factor: DMatrix<f64>,
}

impl TaskSampler {
    pub fn new(g: &GraphTopology, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let n = g.n();
        let m = DMatrix::identity(n, n) + g.laplacian() * lambda;
        let chol = m.cholesky().ok_or_else(|| Error::Numeric("Cholesky of I + lambda L failed".into()))?;
        Ok(Self { factor: chol.l() })
    }

    /// Analytic covariance `(I + lambda L)^-1`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.factor.nrows();
        let rinv = self
            .factor
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular factor has positive diagonal");
        rinv.transpose() * rinv
    }

    /// One column of `N` correlated coordinates.
    pub fn draw_column(&self, rng: &mut StreamRng) -> DVector<f64> {
        let n = self.factor.nrows();
        let xi = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.factor.tr_solve_lower_triangular(&xi).expect("triangular factor has positive diagonal")
    }

    /// Raw `N x d` draw, column by column, before any projection.
    pub fn draw_raw(&self, d: usize, rng: &mut StreamRng) -> DMatrix<f64> {
        let n = self.factor.nrows();
        let mut out = DMatrix::zeros(n, d);
        for k in 0..d {
            out.set_column(k, &self.draw_column(rng));
        }
        out
    }

    pub fn draw(&self, d: usize, rng: &mut StreamRng) -> TaskMatrix {
        let raw = self.draw_raw(d, rng);
        let rows =
            raw.row_iter().map(|r| project_unit_ball(&r.iter().copied().collect::<Vec<_>>()).into_vec()).collect();
        TaskMatrix::new(rows).expect("projected rows lie in the ball")
    }
}

/// Comparator matrix for one experiment: Gaussian draw, rows projected to the
/// unit ball.
pub fn sample_task_matrix(g: &GraphTopology, lambda: f64, d: usize, seed: u64) -> Result<TaskMatrix> {
    let sampler = TaskSampler::new(g, lambda)?;
    Ok(sampler.draw(d, &mut rng::seeded(seed)))
}

pub fn sample_loss_center(u: &TaskMatrix, active: usize, noise_std: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if active >= u.n() {
        return Err(Error::Index { index: active, len: u.n() });
    }
    Ok(u.row(active)
        .iter()
        .map(|&m| {
            let e: f64 = rng.sample(StandardNormal);
            m + noise_std * e
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Quadratic,
    Linear,
}

impl LossKind {
    pub fn make(self, v: Vec<f64>) -> Loss {
        match self {
            LossKind::Quadratic => Loss::Quadratic { center: v },
            LossKind::Linear => Loss::Linear { gradient: v },
        }
    }

    fn column_prefix(self) -> &'static str {
        match self {
            LossKind::Quadratic => "z",
            LossKind::Linear => "g",
        }
    }
}

/// Supplies the loss of step `t` for the given active agent.
pub trait LossSource {
    fn next_loss(&mut self, t: usize, active: usize) -> Result<Loss>;
}

/// Losses centered on the task rows.
///
/// Quadratic: `0.5 ||x - z||^2` with `z = U_active + noise`. Linear: gradient
/// `-z` projected to the unit ball, so the hindsight minimizer points along
/// the task row.
#[derive(Debug, Clone)]
pub struct TaskLossStream {
    u: TaskMatrix,
    kind: LossKind,
    noise_std: f64,
    rng: StreamRng,
}

impl TaskLossStream {
    pub fn new(u: TaskMatrix, kind: LossKind, noise_std: f64, rng: StreamRng) -> Self {
        Self { u, kind, noise_std, rng }
    }
}

impl LossSource for TaskLossStream {
    fn next_loss(&mut self, _t: usize, active: usize) -> Result<Loss> {
        let z = sample_loss_center(&self.u, active, self.noise_std, &mut self.rng)?;
        Ok(match self.kind {
            LossKind::Quadratic => Loss::Quadratic { center: z },
            LossKind::Linear => {
                let neg: Vec<f64> = z.iter().map(|v| -v).collect();
                Loss::Linear { gradient: project_unit_ball(&neg).into_vec() }
            }
        })
    }
}

/// A fully materialized `(active, loss)` sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedStream {
    kind: LossKind,
    d: usize,
    actives: Vec<usize>,
    vectors: Vec<Vec<f64>>,
}

impl RecordedStream {
    pub fn new(kind: LossKind, d: usize, actives: Vec<usize>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if actives.len() != vectors.len() {
            return Err(Error::Dimension { expected: actives.len(), got: vectors.len() });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::Dimension { expected: d, got: v.len() });
        }
        Ok(Self { kind, d, actives, vectors })
    }

    /// Draws `t_len` steps: actives from `next_active`, losses from `source`.
    pub fn record(
        kind: LossKind,
        d: usize,
        t_len: usize,
        mut next_active: impl FnMut(usize) -> Result<usize>,
        source: &mut dyn LossSource,
    ) -> Result<Self> {
        let mut actives = Vec::with_capacity(t_len);
        let mut vectors = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let a = next_active(t)?;
            let v = match source.next_loss(t, a)? {
                Loss::Quadratic { center } if kind == LossKind::Quadratic => center,
                Loss::Linear { gradient } if kind == LossKind::Linear => gradient,
                _ => return Err(Error::Unsupported("loss kind differs from the stream kind".into())),
            };
            actives.push(a);
            vectors.push(v);
        }
        Self::new(kind, d, actives, vectors)
    }

    pub fn len(&self) -> usize {
        self.actives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actives.is_empty()
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn actives(&self) -> &[usize] {
        &self.actives
    }

    pub fn loss(&self, t: usize) -> Loss {
        self.kind.make(self.vectors[t].clone())
    }

    pub fn vector(&self, t: usize) -> &[f64] {
        &self.vectors[t]
    }

    fn longest(&self) -> f64 {
        self.vectors.iter().map(|v| crate::variance::norm(v)).fold(0.0, f64::max)
    }

    /// Largest gradient norm any loss of the stream can produce on the unit
    /// ball: `1 + max |z_t|` for quadratics, `max |g_t|` for linear losses.
    /// Zero for an empty stream.
    pub fn lipschitz_bound(&self) -> f64 {
        match self.kind {
            LossKind::Quadratic if !self.vectors.is_empty() => 1.0 + self.longest(),
            _ => self.longest(),
        }
    }

    /// Largest norm of a [`crate::loss::feasible_surrogate`] built from this
    /// stream's losses.
    ///
    /// Linear: `sqrt(2) max |g_t|`. Quadratic: the surrogate differs from
    /// `g = s - z` only when `<z, s> > 1` for the unit direction `s`, and then
    /// its squared norm is below `2 |g|^2 < 2 (|z|^2 - 1)`; so the bound is
    /// `max(1 + m, sqrt(2 (m^2 - 1)))` with `m = max |z_t|`.
    pub fn feedback_bound(&self) -> f64 {
        let m = self.longest();
        match self.kind {
            LossKind::Linear => std::f64::consts::SQRT_2 * m,
            LossKind::Quadratic if self.vectors.is_empty() => 0.0,
            LossKind::Quadratic => (1.0 + m).max((2.0 * (m * m - 1.0)).max(0.0).sqrt()),
        }
    }

    /// Replays from the start.
    pub fn replay(&self) -> Replay<'_> {
        Replay { stream: self }
    }

    /// SHA-256 over the exact bit patterns of the stream.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update([self.kind as u8]);
        h.update((self.d as u64).to_le_bytes());
        for (a, v) in self.actives.iter().zip(&self.vectors) {
            h.update((*a as u64).to_le_bytes());
            for x in v {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// CSV with header `t,active_agent,z_1..z_d` (or `g_1..g_d`); `t` starts
    /// at 1. Floats use the shortest representation that parses back to the
    /// same bits.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["t".to_string(), "active_agent".to_string()];
        header.extend((1..=self.d).map(|k| format!("{}_{k}", self.kind.column_prefix())));
        w.write_record(&header).map_err(csv_err)?;
        for (t, (a, v)) in self.actives.iter().zip(&self.vectors).enumerate() {
            let mut rec = vec![(t + 1).to_string(), a.to_string()];
            rec.extend(v.iter().map(|x| format!("{x:?}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        if header.len() < 2 || &header[0] != "t" || &header[1] != "active_agent" {
            return Err(Error::Parse { line: 1, msg: "expected `t,active_agent,...` header".into() });
        }
        let d = header.len() - 2;
        let kind = match header.get(2).map(|h| h.split('_').next().unwrap_or("")) {
            Some("g") => LossKind::Linear,
            _ => LossKind::Quadratic,
        };
        let mut actives = Vec::new();
        let mut vectors = Vec::new();
        for (idx, rec) in r.records().enumerate() {
            let line = idx + 2;
            let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let t: usize = field(0).parse().map_err(|e| Error::Parse { line, msg: format!("bad t: {e}") })?;
            if t != idx + 1 {
                return Err(Error::Parse { line, msg: format!("expected t={}, found {t}", idx + 1) });
            }
            actives.push(field(1).parse().map_err(|e| Error::Parse { line, msg: format!("bad active agent: {e}") })?);
            vectors.push(
                (0..d)
                    .map(|k| {
                        field(k + 2).parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("bad value: {e}") })
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Self::new(kind, d, actives, vectors)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() }
}

/// Loss source reading a recorded stream; rejects a mismatched active agent.
pub struct Replay<'a> {
    stream: &'a RecordedStream,
}

impl LossSource for Replay<'_> {
    fn next_loss(&mut self, t: usize, active: usize) -> Result<Loss> {
        let s = self.stream;
        if t >= s.len() {
            return Err(Error::LossExhausted(t));
        }
        if s.actives[t] != active {
            return Err(Error::State(format!(
                "recorded active agent {} at step {t}, schedule gave {active}",
                s.actives[t]
            )));
        }
        Ok(s.loss(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::loss::project_unit_ball;
    use crate::variance::variance_profile;
    use proptest::prelude::{prop, prop_assert, proptest};

    #[test]
    fn identity_covariance_at_lambda_zero() {
        let g = erdos_renyi(4, 0.5, 1).unwrap();
        let s = TaskSampler::new(&g, 0.0).unwrap();
        let mut rng = rng::seeded(5);
        let m = 25_000;
        let mut sq = 0.0;
        for _ in 0..m {
            sq += s.draw_column(&mut rng).norm_squared();
        }
        let var = sq / (4 * m) as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn huge_lambda_collapses_rows() {
        let g = erdos_renyi(30, 0.9, 3).unwrap();
        let u = sample_task_matrix(&g, 1e10, 10, 4).unwrap();
        let p = variance_profile(&u, &g).unwrap();
        assert!(p.sigma_bar < 1e-3, "sigma_bar {}", p.sigma_bar);
    }

    #[test]
    fn sigma_bar_decreases_with_lambda() {
        let g = erdos_renyi(30, 0.9, 8).unwrap();
        let mean = |lambda: f64| {
            (0..20)
                .map(|s| variance_profile(&sample_task_matrix(&g, lambda, 10, s).unwrap(), &g).unwrap().sigma_bar)
                .sum::<f64>()
                / 20.0
        };
        let (a, b, c) = (mean(2.0), mean(10.0), mean(1e10));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn loss_centers() {
        let u = TaskMatrix::new(vec![vec![0.5, -0.5], vec![0.0, 0.0]]).unwrap();
        let mut rng = rng::seeded(1);
        assert_eq!(sample_loss_center(&u, 0, 0.0, &mut rng).unwrap(), vec![0.5, -0.5]);
        assert!(sample_loss_center(&u, 2, 0.0, &mut rng).is_err());
        let a = sample_loss_center(&u, 0, 0.01, &mut rng::seeded(9)).unwrap();
        let b = sample_loss_center(&u, 0, 0.01, &mut rng::seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn loss_center_noise_variance() {
        let u = TaskMatrix::zeros(1, 3);
        let mut rng = rng::seeded(21);
        let m = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..m {
            let z = sample_loss_center(&u, 0, 0.01, &mut rng).unwrap();
            for k in 0..3 {
                acc[k] += z[k] * z[k];
            }
        }
        for a in acc {
            let v = a / m as f64;
            assert!((v / 1e-4 - 1.0).abs() < 0.05, "variance {v}");
        }
    }

    #[test]
    fn replay_csv_round_trips_bits() {
        let g = erdos_renyi(5, 0.5, 2).unwrap();
        let u = sample_task_matrix(&g, 3.0, 4, 2).unwrap();
        for kind in [LossKind::Quadratic, LossKind::Linear] {
            let mut src = TaskLossStream::new(u.clone(), kind, 0.01, rng::seeded(3));
            let mut act = rng::seeded(4);
            let rec = RecordedStream::record(kind, 4, 50, |_| Ok(act.random_range(0..5)), &mut src).unwrap();
            let text = rec.to_csv().unwrap();
            let back = RecordedStream::from_csv(&text).unwrap();
            assert_eq!(back, rec);
            assert_eq!(back.digest(), rec.digest());
        }
    }

    #[test]
    fn replay_rejects_wrong_agent_and_exhaustion() {
        let rec = RecordedStream::new(LossKind::Linear, 1, vec![0], vec![vec![1.0]]).unwrap();
        let mut r = rec.replay();
        assert!(r.next_loss(0, 1).is_err());
        assert!(r.next_loss(0, 0).is_ok());
        assert!(matches!(r.next_loss(1, 0), Err(Error::LossExhausted(1))));
    }

    #[test]
    fn csv_header_shape() {
        let rec = RecordedStream::new(LossKind::Quadratic, 2, vec![1], vec![vec![0.5, -0.25]]).unwrap();
        assert_eq!(rec.to_csv().unwrap(), "t,active_agent,z_1,z_2\n1,1,0.5,-0.25\n");
        assert!(RecordedStream::from_csv("t,active_agent,z_1\n1,0,abc\n").is_err());
    }

    proptest! {
        #[test]
        fn feedback_bound_covers_quadratic_surrogates(
            zs in prop::collection::vec(prop::collection::vec(-1.5f64..1.5, 3), 1..6),
            raw in prop::collection::vec(-4.0f64..4.0, 3),
        ) {
            let s = RecordedStream::new(LossKind::Quadratic, 3, vec![0; zs.len()], zs.clone()).unwrap();
            let bound = s.feedback_bound();
            let x = project_unit_ball(&raw).into_vec();
            for t in 0..s.len() {
                let g = s.loss(t).subgradient(&x);
                let sur = crate::loss::feasible_surrogate(&raw, &g);
                prop_assert!(crate::variance::norm(&sur) <= bound + 1e-12);
            }
        }
    }
}
