//! Experiment drivers: baselines, regret bookkeeping, sweeps and reports.

mod baselines;
mod experiment;
mod regret;
pub mod report;

pub use baselines::{run_dope, run_iftrl, run_network, run_stftrl};
pub use experiment::{
    build_graph, build_instance, cell_seed, dp_sweep, loss_lipschitz, mean_se, noise_seed, run_algorithm, run_figure1,
    run_figure2, run_private, score, summarize_sweep, ActivationModel, Algorithm, CellResult, Curve, DpCell, DpRow,
    DpSweepResult, ExperimentConfig, Figure1Result, Instance, MeanSe, SweepSummary, DEFAULT_LAMBDAS,
};
pub use regret::{hindsight_comparator, multitask_regret, RegretLedger};
