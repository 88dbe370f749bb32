//! Python bindings: graphs, Cayley construction, rewirers, spectral
//! diagnostics, dataset generation and sweeps.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use prior_rewire::graph::{Colour, NodePair};
use prior_rewire::harness::{self, ExperimentConfig};
use prior_rewire::rewire::{self, Rewirer};
use prior_rewire::synthdata::{self, DatasetKind};
use prior_rewire::{cayley, spectral};

fn err(e: prior_rewire::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Simple undirected graph with optional node colours.
#[pyclass(name = "Graph", module = "prior_rewire", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: prior_rewire::Graph,
}

impl From<prior_rewire::Graph> for PyGraph {
    fn from(inner: prior_rewire::Graph) -> Self {
        PyGraph { inner }
    }
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (num_nodes, edges, colours=None))]
    fn new(num_nodes: usize, edges: Vec<NodePair>, colours: Option<Vec<Option<Colour>>>) -> PyResult<Self> {
        let g = prior_rewire::Graph::new(num_nodes, edges).map_err(err)?;
        let g = match colours {
            Some(c) => g.with_colours(c).map_err(err)?,
            None => g,
        };
        Ok(g.into())
    }

    /// Parses the edge-list text format.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(prior_rewire::graph::parse_edge_list(text).map_err(err)?.into())
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn edges(&self) -> Vec<NodePair> {
        self.inner.edges().to_vec()
    }

    fn neighbours(&self, u: usize) -> PyResult<Vec<usize>> {
        if u >= self.inner.num_nodes() {
            return Err(PyValueError::new_err(format!("node {u} out of range")));
        }
        Ok(self.inner.neighbours(u).to_vec())
    }

    fn colours(&self) -> Option<Vec<Option<Colour>>> {
        self.inner.colours().map(<[_]>::to_vec)
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.inner.num_nodes() && v < self.inner.num_nodes() && self.inner.has_edge(u, v)
    }

    fn pairs_at_distance(&self, d: usize) -> PyResult<Vec<NodePair>> {
        self.inner.pairs_at_distance(d).map_err(err)
    }

    /// Node `u` moves to `perm[u]`.
    fn relabel(&self, perm: Vec<usize>) -> PyResult<Self> {
        Ok(self.inner.relabel(&perm).map_err(err)?.into())
    }

    fn __repr__(&self) -> String {
        format!("Graph(num_nodes={}, num_edges={})", self.inner.num_nodes(), self.inner.num_edges())
    }
}

#[pyfunction]
fn cayley_size(n: u64) -> PyResult<u64> {
    cayley::cayley_size(n).map_err(err)
}

#[pyfunction]
fn minimal_n_for(size: usize) -> u32 {
    cayley::minimal_n_for(size)
}

/// Full Cayley graph of SL(2, Z_n).
#[pyfunction]
fn build_cayley(n: u32) -> PyResult<PyGraph> {
    Ok(cayley::build_cayley(n).map_err(err)?.graph.into())
}

#[pyfunction]
fn trimmed_cayley(size: usize) -> PyResult<PyGraph> {
    Ok(cayley::trimmed_cayley(size).map_err(err)?.graph.into())
}

/// Greedy alignment of `g1` onto `g2`; returns the node mapping.
#[pyfunction]
fn greedy_align(g1: &PyGraph, g2: &PyGraph) -> PyResult<Vec<usize>> {
    Ok(rewire::greedy_align(&g1.inner, &g2.inner).map_err(err)?.mapping)
}

/// Builds a rewire plan and returns `(rewired_graph, schedule)` where the
/// schedule lists `"base"` or `"rewired"` per layer.
#[pyfunction]
#[pyo3(signature = (g, method, layers=5, d=0, seed=0))]
fn rewire_graph(g: &PyGraph, method: &str, layers: usize, d: usize, seed: u64) -> PyResult<(PyGraph, Vec<&'static str>)> {
    let r: Rewirer = method.parse().map_err(err)?;
    let plan = r.plan(&g.inner, layers, d, seed).map_err(err)?;
    let schedule = plan
        .schedule
        .iter()
        .map(|l| match l {
            rewire::LayerGraph::Base => "base",
            rewire::LayerGraph::Rewired => "rewired",
        })
        .collect();
    Ok((plan.rewired.into(), schedule))
}

#[pyfunction]
fn captured_pairs(rewired: &PyGraph, pairs: Vec<NodePair>) -> usize {
    rewire::captured_pairs(&rewired.inner, &pairs)
}

#[pyfunction]
fn effective_resistance(g: &PyGraph, u: usize, v: usize) -> PyResult<f64> {
    spectral::effective_resistance(&g.inner, u, v).map_err(err)
}

#[pyfunction]
fn commute_time(g: &PyGraph, u: usize, v: usize) -> PyResult<f64> {
    spectral::commute_time(&g.inner, u, v).map_err(err)
}

#[pyfunction]
fn average_commute_time(g: &PyGraph) -> PyResult<f64> {
    spectral::average_commute_time(&g.inner).map_err(err)
}

#[pyfunction]
fn spectral_gap(g: &PyGraph) -> f64 {
    spectral::spectral_gap(&g.inner)
}

#[pyfunction]
fn diameter(g: &PyGraph) -> PyResult<usize> {
    spectral::diameter(&g.inner).map_err(err)
}

#[pyfunction]
fn target_data_a(g: &PyGraph, values: Vec<f64>, c1: f64, c2: f64, c3: f64, d: usize) -> PyResult<f64> {
    synthdata::target_data_a(&g.inner, &values, c1, c2, c3, d).map_err(err)
}

#[pyfunction]
fn target_data_b(g: &PyGraph, values: Vec<f64>, c1: f64, c2: f64) -> PyResult<f64> {
    synthdata::target_data_b(&g.inner, &values, c1, c2).map_err(err)
}

fn parse_config(kind: &str, config: Option<&str>) -> PyResult<ExperimentConfig> {
    let kind: DatasetKind = kind.parse().map_err(err)?;
    ExperimentConfig::parse(config.unwrap_or(""), kind).map_err(err)
}

type PySample = (PyGraph, Vec<Vec<f64>>, f64);

fn export(samples: Vec<synthdata::Sample>) -> Vec<PySample> {
    samples
        .into_iter()
        .map(|s| {
            let rows = (0..s.features.rows()).map(|r| s.features.row(r).to_vec()).collect();
            (s.graph.into(), rows, s.target)
        })
        .collect()
}

/// Generates `(train, eval)` lists of `(graph, features, target)` from a
/// flat `key = value` config (same keys as the sweep config).
#[pyfunction]
#[pyo3(signature = (kind, config=None))]
fn generate_dataset(py: Python<'_>, kind: &str, config: Option<&str>) -> PyResult<(Vec<PySample>, Vec<PySample>)> {
    let cfg = parse_config(kind, config)?;
    let data = py
        .detach(|| synthdata::gen_dataset(&cfg.scaled_dataset()))
        .map_err(err)?;
    Ok((export(data.train), export(data.eval)))
}

/// Runs a sweep and returns one dict-like tuple per result row:
/// `(rewirer, c2_over_c1, c3, seed, final_eval_mse, ratio_to_base)`.
#[pyfunction]
#[pyo3(signature = (kind, config=None, workers=1, out=None))]
fn sweep(
    py: Python<'_>,
    kind: &str,
    config: Option<&str>,
    workers: usize,
    out: Option<std::path::PathBuf>,
) -> PyResult<Vec<(String, f64, f64, u64, f64, f64)>> {
    let cfg = parse_config(kind, config)?;
    let result = py
        .detach(|| harness::run_sweep(&cfg, workers.max(1), out.as_deref()))
        .map_err(err)?;
    Ok(result
        .rows
        .into_iter()
        .map(|r| (r.rewirer.name().to_string(), r.ratio, r.c3, r.seed, r.final_eval_mse, r.ratio_to_base))
        .collect())
}

#[pymodule]
#[pyo3(name = "prior_rewire")]
fn prior_rewire_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(cayley_size, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_n_for, m)?)?;
    m.add_function(wrap_pyfunction!(build_cayley, m)?)?;
    m.add_function(wrap_pyfunction!(trimmed_cayley, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_align, m)?)?;
    m.add_function(wrap_pyfunction!(rewire_graph, m)?)?;
    m.add_function(wrap_pyfunction!(captured_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(effective_resistance, m)?)?;
    m.add_function(wrap_pyfunction!(commute_time, m)?)?;
    m.add_function(wrap_pyfunction!(average_commute_time, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_gap, m)?)?;
    m.add_function(wrap_pyfunction!(diameter, m)?)?;
    m.add_function(wrap_pyfunction!(target_data_a, m)?)?;
    m.add_function(wrap_pyfunction!(target_data_b, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
