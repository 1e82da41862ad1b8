//! Comparison algorithms and thin drivers over recorded streams.

use crate::engine::NetworkState;
use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::learner::KtCliqueState;
use crate::loss::{feasible_surrogate, project_unit_ball, Loss};
use crate::privacy::DopeNetworkState;
use crate::stream::RecordedStream;

fn single_kt(d: usize, loss_lipschitz: f64) -> Result<KtCliqueState> {
    KtCliqueState::new(1, d, 1.0, loss_lipschitz)
}

/// Plays the projection of the learner's point; returns it with the gradient to feed back.
fn play(agent: &KtCliqueState, loss: &Loss) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw = agent.predict(0)?;
    let x = project_unit_ball(&raw).into_vec();
    let g = loss.subgradient(&x);
    Ok((feasible_surrogate(&raw, &g), x))
}

fn check_agents(stream: &RecordedStream, n: usize) -> Result<()> {
    match stream.actives().iter().find(|&&a| a >= n) {
        Some(&a) => Err(Error::Index { index: a, len: n }),
        None => Ok(()),
    }
}

/// Independent KT-adaptive FTRL per agent; agent `i` learns only from its own steps.
/// `loss_lipschitz` bounds the fed gradients, as for [`crate::learner::BaseLearner::Kt`].
pub fn run_iftrl(n: usize, stream: &RecordedStream, loss_lipschitz: f64) -> Result<Vec<Vec<f64>>> {
    check_agents(stream, n)?;
    let mut agents = (0..n).map(|_| single_kt(stream.d(), loss_lipschitz)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(stream.len());
    for t in 0..stream.len() {
        let a = stream.actives()[t];
        let (g, x) = play(&agents[a], &stream.loss(t))?;
        agents[a].update(0, &g)?;
        out.push(x);
    }
    Ok(out)
}

/// Single-task baseline: every agent keeps one model and learns from every
/// loss in its neighborhood, taking the gradient at its own iterate.
pub fn run_stftrl(g: &GraphTopology, stream: &RecordedStream, loss_lipschitz: f64) -> Result<Vec<Vec<f64>>> {
    check_agents(stream, g.n())?;
    let mut agents = (0..g.n()).map(|_| single_kt(stream.d(), loss_lipschitz)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(stream.len());
    for t in 0..stream.len() {
        let a = stream.actives()[t];
        let loss = stream.loss(t);
        let x = play(&agents[a], &loss)?.1;
        for &j in g.neighborhood(a) {
            let grad = play(&agents[j], &loss)?.0;
            agents[j].update(0, &grad)?;
        }
        out.push(x);
    }
    Ok(out)
}

/// Replays `stream` through a protocol network, returning its predictions.
pub fn run_network(net: &mut NetworkState, stream: &RecordedStream) -> Result<Vec<Vec<f64>>> {
    check_agents(stream, net.graph().n())?;
    (0..stream.len()).map(|t| Ok(net.step_with(stream.actives()[t], &stream.loss(t))?.prediction)).collect()
}

pub fn run_dope(net: &mut DopeNetworkState, stream: &RecordedStream) -> Result<Vec<Vec<f64>>> {
    check_agents(stream, net.graph().n())?;
    (0..stream.len()).map(|t| Ok(net.step_with(stream.actives()[t], &stream.loss(t))?.prediction)).collect()
}
