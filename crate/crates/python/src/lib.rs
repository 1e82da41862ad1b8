//! Python bindings: graphs, the plain and private protocols, task sampling,
//! the aggregation tree, and the experiment drivers.
//!
//! Structured results cross the boundary as JSON and come back as plain
//! Python dicts and lists.

use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use coolcn::engine::{make_weights, BetaMode, NetworkState as CoreNetwork, WeightScheme};
use coolcn::graph::{erdos_renyi, graph_stats, GraphTopology, DEFAULT_EXACT_LIMIT};
use coolcn::harness::{dp_sweep, run_figure1, run_figure2, summarize_sweep, ExperimentConfig};
use coolcn::learner::{BaseLearner, Projection};
use coolcn::privacy::{budget, AggregationTree as CoreTree, DopeNetworkState};
use coolcn::stream::{sample_task_matrix, LossKind};
use coolcn::variance::{variance_profile as core_profile, TaskMatrix};
use coolcn::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Unsupported(_) | Error::Parse { .. } | Error::GraphTooLarge { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::Index { .. } => PyIndexError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn loss_kind(kind: &str) -> PyResult<LossKind> {
    match kind {
        "linear" => Ok(LossKind::Linear),
        "quadratic" => Ok(LossKind::Quadratic),
        other => Err(PyValueError::new_err(format!("loss kind must be \"linear\" or \"quadratic\", got {other:?}"))),
    }
}

fn parse_config(json: Option<&str>) -> PyResult<ExperimentConfig> {
    match json {
        None => Ok(ExperimentConfig::default()),
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("config: {e}"))),
    }
}

#[pyclass(name = "Graph", module = "pycoolcn")]
struct Graph {
    inner: GraphTopology,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self { inner: GraphTopology::from_edges(n, edges).map_err(err)? })
    }

    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        Ok(Self { inner: GraphTopology::complete(n).map_err(err)? })
    }

    #[staticmethod]
    fn path(n: usize) -> PyResult<Self> {
        Ok(Self { inner: GraphTopology::path(n).map_err(err)? })
    }

    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        Ok(Self { inner: GraphTopology::cycle(n).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, p, seed=0))]
    fn erdos_renyi(n: usize, p: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: erdos_renyi(n, p, seed).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    /// Closed neighborhood, sorted.
    fn neighborhood(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.n() {
            return Err(err(Error::Index { index: i, len: self.inner.n() }));
        }
        Ok(self.inner.neighborhood(i).to_vec())
    }

    #[pyo3(signature = (exact_limit=DEFAULT_EXACT_LIMIT))]
    fn stats<'py>(&self, py: Python<'py>, exact_limit: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &graph_stats(&self.inner, exact_limit))
    }

    fn laplacian(&self) -> Vec<Vec<f64>> {
        let l = self.inner.laplacian();
        l.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edges().len())
    }
}

/// The decentralized protocol with uniform weights.
#[pyclass(name = "Network", module = "pycoolcn")]
struct Network {
    inner: CoreNetwork,
}

#[pymethods]
impl Network {
    /// `learner` is `"hedge"`, `"hedge_exact"` or `"kt"`; `loss_lipschitz`
    /// bounds the gradients fed to KT cliques.
    #[new]
    #[pyo3(signature = (graph, d, learner="hedge", loss_lipschitz=1.0))]
    fn new(graph: &Graph, d: usize, learner: &str, loss_lipschitz: f64) -> PyResult<Self> {
        let base = match learner {
            "hedge" => BaseLearner::hedge(),
            "hedge_exact" => BaseLearner::Hedge { projection: Projection::exact_default() },
            "kt" => BaseLearner::Kt { loss_lipschitz },
            other => return Err(PyValueError::new_err(format!("unknown learner {other:?}"))),
        };
        let g = graph.inner.clone();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).map_err(err)?;
        Ok(Self { inner: CoreNetwork::with_mode(g, w, base, d, &BetaMode::Adversarial, None).map_err(err)? })
    }

    fn predict(&self, i: usize) -> PyResult<Vec<f64>> {
        self.inner.predict(i).map_err(err)
    }

    /// One round; returns the step record as a dict.
    #[pyo3(signature = (active, vector, kind="linear"))]
    fn step<'py>(
        &mut self,
        py: Python<'py>,
        active: usize,
        vector: Vec<f64>,
        kind: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let loss = loss_kind(kind)?.make(vector);
        let rec = self.inner.step_with(active, &loss).map_err(err)?;
        to_py(py, &rec)
    }

    #[getter]
    fn global_t(&self) -> usize {
        self.inner.global_t()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }
}

/// The private protocol; linear losses only.
#[pyclass(name = "PrivateNetwork", module = "pycoolcn")]
struct PrivateNetwork {
    inner: DopeNetworkState,
}

#[pymethods]
impl PrivateNetwork {
    #[new]
    #[pyo3(signature = (graph, d, horizon, epsilon, seed=0))]
    fn new(graph: &Graph, d: usize, horizon: usize, epsilon: f64, seed: u64) -> PyResult<Self> {
        let g = graph.inner.clone();
        let w = make_weights(&g, WeightScheme::Uniform, None, None).map_err(err)?;
        let inner = DopeNetworkState::new(g, w, d, horizon, epsilon, &BetaMode::Adversarial, seed).map_err(err)?;
        Ok(Self { inner })
    }

    fn predict(&self, i: usize) -> PyResult<Vec<f64>> {
        self.inner.predict(i).map_err(err)
    }

    fn step<'py>(&mut self, py: Python<'py>, active: usize, gradient: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let rec = self.inner.step_with(active, &LossKind::Linear.make(gradient)).map_err(err)?;
        to_py(py, &rec)
    }

    fn manifest<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.manifest())
    }
}

#[pyclass(name = "AggregationTree", module = "pycoolcn")]
struct AggregationTree {
    inner: CoreTree,
}

#[pymethods]
impl AggregationTree {
    #[new]
    #[pyo3(signature = (horizon, dim, scale, seed=0))]
    fn new(horizon: usize, dim: usize, scale: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: CoreTree::new(horizon, dim, scale, seed).map_err(err)? })
    }

    /// Appends `value`; returns the sanitized prefix sum.
    fn release(&mut self, value: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.release(&value).map_err(err)
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels()
    }

    #[getter]
    fn last_noise_terms(&self) -> usize {
        self.inner.last_noise_terms()
    }
}

/// Rows of a task matrix drawn with covariance `(I + lambda L)^-1` per coordinate.
#[pyfunction]
#[pyo3(signature = (graph, lam, d, seed=0))]
fn sample_tasks(graph: &Graph, lam: f64, d: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(sample_task_matrix(&graph.inner, lam, d, seed).map_err(err)?.rows().to_vec())
}

#[pyfunction]
fn variance_profile<'py>(py: Python<'py>, rows: Vec<Vec<f64>>, graph: &Graph) -> PyResult<Bound<'py, PyAny>> {
    let u = TaskMatrix::new(rows).map_err(err)?;
    to_py(py, &core_profile(&u, &graph.inner).map_err(err)?)
}

/// Noise scales of the private protocol.
#[pyfunction]
fn privacy_budget<'py>(
    py: Python<'py>,
    epsilon: f64,
    n_max: usize,
    d: usize,
    horizon: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &budget(epsilon, n_max, d, horizon).map_err(err)?)
}

#[pyfunction]
fn default_config() -> PyResult<String> {
    serde_json::to_string_pretty(&ExperimentConfig::default()).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Lambda sweep; returns `{"cells": [...], "summary": [...]}`.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn run_sweep<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(config)?;
    let cells = py.detach(|| run_figure2(&cfg)).map_err(err)?;
    let summary = summarize_sweep(&cells);
    to_py(py, &serde_json::json!({ "cells": cells, "summary": summary }))
}

/// Regret curves at the operating point; returns `{"cells": [...], "curves": [...]}`.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn run_curves<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(config)?;
    let r = py.detach(|| run_figure1(&cfg)).map_err(err)?;
    to_py(py, &serde_json::json!({ "cells": r.cells, "curves": r.curves }))
}

#[pyfunction]
fn run_dp_sweep<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(Some(config))?;
    let r = py.detach(|| dp_sweep(&cfg)).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
fn pycoolcn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Network>()?;
    m.add_class::<PrivateNetwork>()?;
    m.add_class::<AggregationTree>()?;
    m.add_function(wrap_pyfunction!(sample_tasks, m)?)?;
    m.add_function(wrap_pyfunction!(variance_profile, m)?)?;
    m.add_function(wrap_pyfunction!(privacy_budget, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_curves, m)?)?;
    m.add_function(wrap_pyfunction!(run_dp_sweep, m)?)?;
    Ok(())
}
