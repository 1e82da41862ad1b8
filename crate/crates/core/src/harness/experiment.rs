//! Seeded experiment cells, the time-curve and sweep drivers, and the
//! privacy sweep.
//!
//! Seed tree: cell seed `s` has base `keyed_seed(master, [s])`; the graph,
//! tasks, activations and losses are the named children `graph`, `tasks`,
//! `activations` and `losses` of that base. The graph, activation sequence
//! and loss noise are shared across the whole lambda grid for one seed; only
//! the task matrix changes with lambda. Private runs draw their noise from
//! `keyed_seed(base, [rep])`, whose children are `noise/<stream-id>`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{run_dope, run_iftrl, run_network, run_stftrl};
use super::regret::{hindsight_comparator, multitask_regret, RegretLedger};
use crate::engine::{make_weights, ActivationSchedule, BetaMode, NetworkState, WeightMatrix, WeightScheme};
use crate::error::{Error, Result};
use crate::graph::{erdos_renyi, GraphTopology};
use crate::learner::BaseLearner;
use crate::privacy::{DopeNetworkState, DpManifest};
use crate::rng;
use crate::stream::{LossKind, RecordedStream, TaskLossStream, TaskSampler};
use crate::variance::{variance_profile, TaskMatrix, VarianceProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Protocol with KT clique learners.
    MtCool,
    /// Protocol with Hedge clique learners.
    CoolCn,
    IFtrl,
    StFtrl,
    /// Private protocol; linear losses only.
    Dope,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MtCool => "mt_cool",
            Algorithm::CoolCn => "cool_cn",
            Algorithm::IFtrl => "i_ftrl",
            Algorithm::StFtrl => "st_ftrl",
            Algorithm::Dope => "dope",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationModel {
    /// `q_i = 1 / N`.
    Uniform,
    Stochastic {
        q: Vec<f64>,
    },
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub d: usize,
    pub lambdas: Vec<f64>,
    pub horizon: usize,
    pub seeds: usize,
    pub algorithms: Vec<Algorithm>,
    pub weight_scheme: WeightScheme,
    pub activation: ActivationModel,
    pub loss: LossKind,
    pub loss_noise_std: f64,
    /// Privacy levels for the private sweep; infinity is always added.
    #[serde(with = "extended_float_vec")]
    pub epsilons: Vec<f64>,
    /// Noise repetitions per seed in the private sweep.
    pub noise_reps: usize,
    pub master_seed: u64,
    /// `sigma_bar` of the time-curve operating point.
    pub sigma_target: f64,
    /// Number of points kept on averaged regret curves.
    pub curve_points: usize,
    pub output_dir: Option<String>,
}

pub const DEFAULT_LAMBDAS: [f64; 10] = [1e10, 10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 30,
            p: 0.9,
            d: 10,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            horizon: 20_000,
            seeds: 8,
            algorithms: vec![Algorithm::MtCool, Algorithm::IFtrl, Algorithm::StFtrl],
            weight_scheme: WeightScheme::Uniform,
            activation: ActivationModel::Uniform,
            loss: LossKind::Quadratic,
            loss_noise_std: 0.01,
            epsilons: vec![0.1, 1.0, 10.0],
            noise_reps: 4,
            master_seed: 0,
            sigma_target: 0.08,
            curve_points: 200,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Long-run sizes: horizon 150000, 48 seeds.
    pub fn full_scale(mut self) -> Self {
        self.horizon = 150_000;
        self.seeds = 48;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p", format!("must lie in [0, 1], got {}", self.p));
        }
        if self.d == 0 {
            return bad("d", "must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon", "must be at least 1".into());
        }
        if self.seeds == 0 {
            return bad("seeds", "must be at least 1".into());
        }
        if self.lambdas.is_empty() {
            return bad("lambdas", "must not be empty".into());
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return bad("lambdas", format!("must be finite and >= 0, got {l}"));
        }
        if self.algorithms.is_empty() {
            return bad("algorithms", "must not be empty".into());
        }
        if !(self.loss_noise_std >= 0.0) || !self.loss_noise_std.is_finite() {
            return bad("loss_noise_std", format!("must be finite and >= 0, got {}", self.loss_noise_std));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0)) {
            return bad("epsilons", format!("must be positive, got {e}"));
        }
        if self.noise_reps == 0 {
            return bad("noise_reps", "must be at least 1".into());
        }
        if self.curve_points == 0 {
            return bad("curve_points", "must be at least 1".into());
        }
        if matches!(self.weight_scheme, WeightScheme::Delegation | WeightScheme::Custom) {
            return bad("weight_scheme", "experiments support uniform and stochastic_conditional".into());
        }
        if let ActivationModel::Stochastic { q } = &self.activation {
            if q.len() != self.n {
                return bad("activation.q", format!("expected {} entries, got {}", self.n, q.len()));
            }
            let s: f64 = q.iter().sum();
            if q.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return bad("activation.q", "must be a probability vector".into());
            }
        }
        if self.algorithms.contains(&Algorithm::Dope) && self.loss != LossKind::Linear {
            return Err(Error::Unsupported("dope is defined for linear losses only; set \"loss\": \"linear\"".into()));
        }
        Ok(())
    }

    fn schedule(&self, seed: u64) -> ActivationSchedule {
        match &self.activation {
            ActivationModel::Uniform => ActivationSchedule::uniform(self.n, seed),
            ActivationModel::Stochastic { q } => ActivationSchedule::Stochastic { q: q.clone(), seed },
            ActivationModel::RoundRobin => ActivationSchedule::RoundRobin { order: (0..self.n).collect() },
        }
    }
}

/// JSON has no infinity, so `inf` travels as a string.
mod extended_float_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<Repr> =
            v.iter().map(|&x| if x == f64::INFINITY { Repr::Text("inf".into()) } else { Repr::Num(x) }).collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(x) => Ok(x),
                Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
            })
            .collect()
    }
}

/// Base seed of cell `seed_index`.
pub fn cell_seed(master: u64, seed_index: usize) -> u64 {
    rng::keyed_seed(master, &[seed_index as u64])
}

/// Master seed of the private noise for repetition `rep` of a cell.
pub fn noise_seed(cell: u64, rep: usize) -> u64 {
    rng::keyed_seed(cell, &[rep as u64])
}

/// One draw of graph, tasks and loss stream.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed_index: usize,
    pub cell_seed: u64,
    pub lambda: f64,
    pub graph: GraphTopology,
    pub tasks: TaskMatrix,
    pub profile: VarianceProfile,
    pub schedule: ActivationSchedule,
    pub stream: RecordedStream,
    pub comparator: TaskMatrix,
    pub digest: String,
}

pub fn build_graph(cfg: &ExperimentConfig, seed_index: usize) -> Result<GraphTopology> {
    erdos_renyi(cfg.n, cfg.p, rng::child_seed(cell_seed(cfg.master_seed, seed_index), "graph"))
}

pub fn build_instance(cfg: &ExperimentConfig, lambda: f64, seed_index: usize) -> Result<Instance> {
    let graph = build_graph(cfg, seed_index)?;
    build_instance_on(cfg, graph, lambda, seed_index)
}

fn build_instance_on(cfg: &ExperimentConfig, graph: GraphTopology, lambda: f64, seed_index: usize) -> Result<Instance> {
    let base = cell_seed(cfg.master_seed, seed_index);
    let tasks = TaskSampler::new(&graph, lambda)?.draw(cfg.d, &mut rng::stream(base, "tasks"));
    let profile = variance_profile(&tasks, &graph)?;
    let schedule = cfg.schedule(rng::child_seed(base, "activations"));
    let mut acts = schedule.start(cfg.n)?;
    let mut source = TaskLossStream::new(tasks.clone(), cfg.loss, cfg.loss_noise_std, rng::stream(base, "losses"));
    let stream = RecordedStream::record(cfg.loss, cfg.d, cfg.horizon, |_| acts.next_active(), &mut source)?;
    let comparator = hindsight_comparator(&stream, cfg.n)?;
    let digest = stream.digest();
    Ok(Instance { seed_index, cell_seed: base, lambda, graph, tasks, profile, schedule, stream, comparator, digest })
}

fn weights_for(cfg: &ExperimentConfig, inst: &Instance) -> Result<WeightMatrix> {
    make_weights(&inst.graph, cfg.weight_scheme, inst.schedule.probabilities(), None)
}

fn beta_mode(inst: &Instance) -> BetaMode {
    match inst.schedule.probabilities() {
        Some(q) => BetaMode::Stochastic { q: q.to_vec() },
        None => BetaMode::Adversarial,
    }
}

/// Predictions of `algo` on `inst`. `epsilon` and `noise` only affect the
/// private protocol.
pub fn run_algorithm(
    cfg: &ExperimentConfig,
    inst: &Instance,
    algo: Algorithm,
    epsilon: f64,
    noise: u64,
) -> Result<Vec<Vec<f64>>> {
    let lip = loss_lipschitz(&inst.stream);
    match algo {
        Algorithm::IFtrl => run_iftrl(cfg.n, &inst.stream, lip),
        Algorithm::StFtrl => run_stftrl(&inst.graph, &inst.stream, lip),
        Algorithm::MtCool | Algorithm::CoolCn => {
            let learner =
                if algo == Algorithm::MtCool { BaseLearner::Kt { loss_lipschitz: lip } } else { BaseLearner::hedge() };
            let mut net = NetworkState::with_mode(
                inst.graph.clone(),
                weights_for(cfg, inst)?,
                learner,
                cfg.d,
                &beta_mode(inst),
                None,
            )?;
            run_network(&mut net, &inst.stream)
        }
        Algorithm::Dope => Ok(run_private(cfg, inst, epsilon, noise)?.0),
    }
}

/// Private protocol on `inst` with its audit record.
pub fn run_private(
    cfg: &ExperimentConfig,
    inst: &Instance,
    epsilon: f64,
    noise: u64,
) -> Result<(Vec<Vec<f64>>, DpManifest)> {
    if cfg.loss != LossKind::Linear {
        return Err(Error::Unsupported("dope is defined for linear losses only".into()));
    }
    let mut net = DopeNetworkState::new(
        inst.graph.clone(),
        weights_for(cfg, inst)?,
        cfg.d,
        cfg.horizon.max(2),
        epsilon,
        &beta_mode(inst),
        noise,
    )?;
    let preds = run_dope(&mut net, &inst.stream)?;
    Ok((preds, net.manifest()))
}

/// Gradient bound handed to the KT learners: the stream's bound on fed
/// gradients over the unit ball, or 1 when the stream is all zeros.
pub fn loss_lipschitz(stream: &RecordedStream) -> f64 {
    let l = stream.feedback_bound();
    if l > 0.0 {
        l
    } else {
        1.0
    }
}

pub fn score(inst: &Instance, predictions: &[Vec<f64>]) -> Result<RegretLedger> {
    multitask_regret(predictions, &inst.stream, &inst.comparator)
}

/// One algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub algo: Algorithm,
    pub seed: usize,
    pub lambda: f64,
    pub sigma_bar: f64,
    pub stream_digest: String,
    pub final_regret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Mean and standard error (`sd / sqrt(k)`, zero for a single value).
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let k = xs.len() as f64;
    if xs.is_empty() {
        return MeanSe { mean: f64::NAN, se: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    MeanSe { mean, se: (var / k).sqrt() }
}

/// Averaged regret-vs-time curve of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub algo: Algorithm,
    /// 1-based step counts.
    pub t: Vec<usize>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Result {
    pub cells: Vec<CellResult>,
    pub curves: Vec<Curve>,
}

fn curve_steps(horizon: usize, points: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (1..=points).map(|k| (k * horizon).div_ceil(points)).collect();
    steps.dedup();
    steps
}

/// Instances for every lambda on the shared graph of one seed.
fn lambda_instances(cfg: &ExperimentConfig, seed_index: usize) -> Result<Vec<Instance>> {
    let graph = build_graph(cfg, seed_index)?;
    cfg.lambdas.iter().map(|&l| build_instance_on(cfg, graph.clone(), l, seed_index)).collect()
}

/// Regret over time at the operating point: per seed, the lambda whose
/// realized `sigma_bar` is nearest `cfg.sigma_target`.
pub fn run_figure1(cfg: &ExperimentConfig) -> Result<Figure1Result> {
    cfg.validate()?;
    let per_seed: Vec<Vec<(CellResult, RegretLedger)>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| {
            let insts = lambda_instances(cfg, s)?;
            let inst = insts
                .into_iter()
                .min_by(|a, b| {
                    let da = (a.profile.sigma_bar - cfg.sigma_target).abs();
                    let db = (b.profile.sigma_bar - cfg.sigma_target).abs();
                    da.total_cmp(&db)
                })
                .expect("lambda grid is not empty");
            log::info!("seed {s}: lambda {} sigma_bar {:.4}", inst.lambda, inst.profile.sigma_bar);
            cfg.algorithms
                .par_iter()
                .map(|&algo| {
                    let ledger =
                        score(&inst, &run_algorithm(cfg, &inst, algo, f64::INFINITY, noise_seed(inst.cell_seed, 0))?)?;
                    let cell = CellResult {
                        algo,
                        seed: s,
                        lambda: inst.lambda,
                        sigma_bar: inst.profile.sigma_bar,
                        stream_digest: inst.digest.clone(),
                        final_regret: ledger.final_regret(),
                    };
                    Ok((cell, ledger))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let steps = curve_steps(cfg.horizon, cfg.curve_points);
    let curves = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(k, &algo)| {
            let (mut mean, mut se) = (Vec::new(), Vec::new());
            for &t in &steps {
                let vals: Vec<f64> = per_seed.iter().map(|cells| cells[k].1.cumulative[t - 1]).collect();
                let m = mean_se(&vals);
                mean.push(m.mean);
                se.push(m.se);
            }
            Curve { algo, t: steps.clone(), mean, se }
        })
        .collect();
    let cells = per_seed.into_iter().flatten().map(|(c, _)| c).collect();
    Ok(Figure1Result { cells, curves })
}

/// Final regret of every algorithm on every `(lambda, seed)` cell, in
/// `(lambda, seed, algorithm)` order.
pub fn run_figure2(cfg: &ExperimentConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let per_seed: Vec<Vec<Vec<CellResult>>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| {
            let insts = lambda_instances(cfg, s)?;
            insts
                .par_iter()
                .map(|inst| {
                    cfg.algorithms
                        .par_iter()
                        .map(|&algo| {
                            let preds = run_algorithm(cfg, inst, algo, f64::INFINITY, noise_seed(inst.cell_seed, 0))?;
                            Ok(CellResult {
                                algo,
                                seed: s,
                                lambda: inst.lambda,
                                sigma_bar: inst.profile.sigma_bar,
                                stream_digest: inst.digest.clone(),
                                final_regret: score(inst, &preds)?.final_regret(),
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(cfg.lambdas.len() * cfg.seeds * cfg.algorithms.len());
    for li in 0..cfg.lambdas.len() {
        for seed_cells in &per_seed {
            out.extend(seed_cells[li].iter().cloned());
        }
    }
    Ok(out)
}

/// Per-`(lambda, algorithm)` aggregate of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub lambda: f64,
    pub algo: Algorithm,
    pub sigma_bar: MeanSe,
    pub final_regret: MeanSe,
}

pub fn summarize_sweep(cells: &[CellResult]) -> Vec<SweepSummary> {
    let mut keys: Vec<(f64, Algorithm)> = Vec::new();
    for c in cells {
        if !keys.iter().any(|&(l, a)| l == c.lambda && a == c.algo) {
            keys.push((c.lambda, c.algo));
        }
    }
    keys.into_iter()
        .map(|(lambda, algo)| {
            let sel: Vec<&CellResult> = cells.iter().filter(|c| c.lambda == lambda && c.algo == algo).collect();
            let sig: Vec<f64> = sel.iter().map(|c| c.sigma_bar).collect();
            let reg: Vec<f64> = sel.iter().map(|c| c.final_regret).collect();
            SweepSummary { lambda, algo, sigma_bar: mean_se(&sig), final_regret: mean_se(&reg) }
        })
        .collect()
}

/// One private-sweep run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpCell {
    #[serde(with = "crate::privacy::extended_float")]
    pub epsilon: f64,
    pub algo: Algorithm,
    pub seed: usize,
    pub noise_rep: usize,
    pub final_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpRow {
    #[serde(with = "crate::privacy::extended_float")]
    pub epsilon: f64,
    pub dope: MeanSe,
    pub i_ftrl: MeanSe,
    pub cool_cn: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSweepResult {
    pub lambda: f64,
    pub cells: Vec<DpCell>,
    pub rows: Vec<DpRow>,
    /// Largest privacy level at which i-FTRL beats the private protocol in mean.
    pub crossover_epsilon: Option<f64>,
}

/// Private protocol against i-FTRL and the noiseless protocol over
/// `cfg.epsilons` plus infinity, on the first lambda of the grid.
pub fn dp_sweep(cfg: &ExperimentConfig) -> Result<DpSweepResult> {
    let mut cfg = cfg.clone();
    if cfg.loss != LossKind::Linear {
        return Err(Error::Unsupported("the private sweep needs \"loss\": \"linear\"".into()));
    }
    cfg.algorithms = vec![Algorithm::Dope, Algorithm::IFtrl, Algorithm::CoolCn];
    cfg.validate()?;
    let mut eps: Vec<f64> = cfg.epsilons.clone();
    eps.push(f64::INFINITY);
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let lambda = cfg.lambdas[0];

    let per_seed: Vec<Vec<DpCell>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| {
            let inst = build_instance(&cfg, lambda, s)?;
            let base = |algo| -> Result<f64> {
                Ok(score(&inst, &run_algorithm(&cfg, &inst, algo, f64::INFINITY, 0)?)?.final_regret())
            };
            let ift = base(Algorithm::IFtrl)?;
            let cool = base(Algorithm::CoolCn)?;
            let jobs: Vec<(f64, usize)> = eps.iter().flat_map(|&e| (0..cfg.noise_reps).map(move |r| (e, r))).collect();
            let mut cells: Vec<DpCell> = jobs
                .par_iter()
                .map(|&(e, r)| {
                    let preds = run_algorithm(&cfg, &inst, Algorithm::Dope, e, noise_seed(inst.cell_seed, r))?;
                    Ok(DpCell {
                        epsilon: e,
                        algo: Algorithm::Dope,
                        seed: s,
                        noise_rep: r,
                        final_regret: score(&inst, &preds)?.final_regret(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for &e in &eps {
                cells.push(DpCell { epsilon: e, algo: Algorithm::IFtrl, seed: s, noise_rep: 0, final_regret: ift });
                cells.push(DpCell { epsilon: e, algo: Algorithm::CoolCn, seed: s, noise_rep: 0, final_regret: cool });
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<DpCell> = per_seed.into_iter().flatten().collect();

    let pick = |e: f64, a: Algorithm| -> Vec<f64> {
        cells.iter().filter(|c| c.epsilon == e && c.algo == a).map(|c| c.final_regret).collect()
    };
    let rows: Vec<DpRow> = eps
        .iter()
        .map(|&e| DpRow {
            epsilon: e,
            dope: mean_se(&pick(e, Algorithm::Dope)),
            i_ftrl: mean_se(&pick(e, Algorithm::IFtrl)),
            cool_cn: mean_se(&pick(e, Algorithm::CoolCn)),
        })
        .collect();
    let crossover_epsilon = rows.iter().rev().find(|r| r.i_ftrl.mean < r.dope.mean).map(|r| r.epsilon);
    Ok(DpSweepResult { lambda, cells, rows, crossover_epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { n: 6, p: 0.6, d: 3, lambdas: vec![1e10, 3.0], horizon: 300, seeds: 2, ..Default::default() }
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = ExperimentConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"n": 4, "epsilons": [1, "inf"]}"#).unwrap();
        assert_eq!(partial.n, 4);
        assert_eq!(partial.epsilons, vec![1.0, f64::INFINITY]);
        assert_eq!(partial.horizon, 20_000);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn full_scale_sets_long_run_sizes() {
        let c = ExperimentConfig::default().full_scale();
        assert_eq!((c.horizon, c.seeds), (150_000, 48));
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut c = small();
        c.seeds = 0;
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.starts_with("seeds")));
        let mut c = small();
        c.algorithms = vec![Algorithm::Dope];
        assert!(matches!(c.validate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn lambda_sweep_is_deterministic_and_shares_streams() {
        let cfg = small();
        let a = run_figure2(&cfg).unwrap();
        let b = run_figure2(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2 * 3);
        for chunk in a.chunks(3) {
            assert!(chunk.iter().all(|c| c.stream_digest == chunk[0].stream_digest));
            assert_eq!(chunk.iter().map(|c| c.algo).collect::<Vec<_>>(), cfg.algorithms);
        }
        assert_eq!(summarize_sweep(&a).len(), 2 * 3);
    }

    #[test]
    fn time_curves_end_at_final_means() {
        let cfg = ExperimentConfig { curve_points: 7, ..small() };
        let r = run_figure1(&cfg).unwrap();
        for (k, c) in r.curves.iter().enumerate() {
            assert_eq!(*c.t.last().unwrap(), cfg.horizon);
            let finals: Vec<f64> =
                r.cells.iter().filter(|x| x.algo == cfg.algorithms[k]).map(|x| x.final_regret).collect();
            assert_eq!(*c.mean.last().unwrap(), mean_se(&finals).mean);
        }
    }

    #[test]
    fn infinite_epsilon_dope_matches_cool_cn() {
        let cfg = ExperimentConfig { loss: LossKind::Linear, epsilons: vec![], noise_reps: 2, ..small() };
        let r = dp_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        let row = &r.rows[0];
        assert!((row.dope.mean - row.cool_cn.mean).abs() < 1e-6);
    }

    #[test]
    fn mean_se_basics() {
        let m = mean_se(&[1.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.se - 1.0).abs() < 1e-15);
        assert_eq!(mean_se(&[5.0]).se, 0.0);
    }
}
