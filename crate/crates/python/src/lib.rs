//! Python bindings: tree environments, Q-tables, datasets, the metrics and
//! the correlation experiment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use opeval_core::env::TreeEnv;
use opeval_core::harness::{self, CorrelationSummary, ExperimentConfig, QDistribution};
use opeval_core::io::{self, LogCheck};
use opeval_core::metrics::{self, evaluate, opc_points, AnnotatedPoint, MetricOptions};
use opeval_core::{stats, Dataset, Error, MetricName, Policy, PriorConfig, QTable};
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(opeval, DegenerateError, PyValueError, "The score carries no information on this dataset.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Degenerate { .. } => DegenerateError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn prior(p: f64) -> PyResult<PriorConfig> {
    PriorConfig::new(p).map_err(to_py)
}

/// Full binary tree with binary terminal rewards.
#[pyclass(name = "TreeEnv", module = "opeval", frozen)]
struct PyTreeEnv {
    inner: TreeEnv,
}

#[pymethods]
impl PyTreeEnv {
    /// Give leaf ordinals (0 = leftmost) as `success_leaves` or
    /// `failure_leaves`; with neither, leaf 0 is the only success.
    #[new]
    #[pyo3(signature = (depth = 6, success_leaves = None, failure_leaves = None, slip = 0.0))]
    fn new(depth: usize, success_leaves: Option<Vec<usize>>, failure_leaves: Option<Vec<usize>>, slip: f64) -> PyResult<Self> {
        let inner = match (success_leaves, failure_leaves) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give success_leaves or failure_leaves, not both")),
            (None, Some(f)) => TreeEnv::with_failure_ordinals(depth, &f, slip),
            (s, None) => TreeEnv::from_leaf_ordinals(depth, &s.unwrap_or_else(|| vec![0]), slip),
        }
        .map_err(to_py)?;
        Ok(PyTreeEnv { inner })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn slip(&self) -> f64 {
        self.inner.slip()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn internal_count(&self) -> usize {
        self.inner.internal_count()
    }

    /// Exact expected return of the argmax policy of `q`.
    fn exact_return(&self, q: &PyQTable) -> PyResult<f64> {
        self.inner.exact_return(&Policy::Argmax(&q.inner)).map_err(to_py)
    }

    /// Exact expected return of the uniform random policy.
    fn uniform_return(&self) -> PyResult<f64> {
        self.inner.exact_return(&Policy::Uniform { action_count: 2 }).map_err(to_py)
    }

    fn optimal_qtable(&self) -> PyQTable {
        PyQTable {
            inner: self.inner.optimal_qtable(),
        }
    }

    fn random_qtable(&self, index: usize, seed: u64, max: f64) -> PyResult<PyQTable> {
        if !(max > 0.0 && max.is_finite()) {
            return Err(PyValueError::new_err("max must be positive"));
        }
        Ok(PyQTable {
            inner: harness::generate_random_q(&self.inner, &QDistribution::Uniform { max }, index, seed),
        })
    }

    /// `epsilon`, `c`, `bound`, `per_step` and `feasible_start_return` for
    /// the argmax policy of `q`.
    fn first_mistake_error<'py>(&self, py: Python<'py>, q: &PyQTable) -> PyResult<Bound<'py, PyDict>> {
        let fm = self.inner.first_mistake_error(&Policy::Argmax(&q.inner), None).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("per_step", fm.per_step)?;
        d.set_item("epsilon", fm.epsilon)?;
        d.set_item("c", fm.c)?;
        d.set_item("horizon", fm.horizon)?;
        d.set_item("bound", fm.bound)?;
        d.set_item("feasible_start_return", fm.feasible_start_return)?;
        Ok(d)
    }

    /// Rolls out the uniform random policy.
    #[pyo3(signature = (n_episodes, seed = 0))]
    fn collect(&self, n_episodes: usize, seed: u64) -> PyResult<PyDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let behavior = Policy::Uniform { action_count: 2 };
        let inner = harness::collect_dataset(&self.inner, &behavior, n_episodes, "tree", seed, &mut rng).map_err(to_py)?;
        Ok(PyDataset { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "TreeEnv(depth={}, successes={}, slip={})",
            self.inner.depth(),
            self.inner.success_leaves().len(),
            self.inner.slip()
        )
    }
}

/// Dense state x action table of Q-values.
#[pyclass(name = "QTable", module = "opeval", frozen)]
struct PyQTable {
    inner: QTable,
}

#[pymethods]
impl PyQTable {
    #[new]
    #[pyo3(signature = (rows, id = "q".to_string()))]
    fn new(rows: Vec<Vec<f64>>, id: String) -> PyResult<Self> {
        Ok(PyQTable {
            inner: QTable::from_rows(id, &rows).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyQTable {
            inner: io::read_qtable(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_qtable(&path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "QTable(id={:?}, states={}, actions={})",
            self.inner.id,
            self.inner.state_count(),
            self.inner.action_count()
        )
    }
}

/// Logged episodes, with or without Q annotations.
#[pyclass(name = "Dataset", module = "opeval", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// Reads a JSON-lines episode log.
    #[staticmethod]
    #[pyo3(signature = (path, binary = false))]
    fn load(path: PathBuf, binary: bool) -> PyResult<Self> {
        let check = LogCheck {
            binary,
            ..LogCheck::default()
        };
        Ok(PyDataset {
            inner: io::read_log(&path, &check).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_log(&path, &self.inner).map_err(to_py)
    }

    fn annotate(&self, q: &PyQTable) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: opeval_core::annotate(&self.inner, &q.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn is_annotated(&self) -> bool {
        self.inner.is_annotated()
    }

    #[getter]
    fn transition_count(&self) -> usize {
        self.inner.transition_count()
    }

    fn success_rate(&self) -> f64 {
        let n = self.inner.episodes.len() as f64;
        self.inner.episodes.iter().filter(|e| e.is_success()).count() as f64 / n
    }

    fn __len__(&self) -> usize {
        self.inner.episodes.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(episodes={}, transitions={}, annotated={})",
            self.inner.episodes.len(),
            self.inner.transition_count(),
            self.inner.is_annotated()
        )
    }
}

fn annotated(d: &PyDataset, q: Option<&PyQTable>) -> PyResult<Dataset> {
    match q {
        Some(q) => opeval_core::annotate(&d.inner, &q.inner).map_err(to_py),
        None => Ok(d.inner.clone()),
    }
}

fn metric(name: MetricName, d: &PyDataset, q: Option<&PyQTable>, p: f64, gamma: f64) -> PyResult<f64> {
    let opts = MetricOptions {
        prior: p,
        gamma,
        ..MetricOptions::default()
    };
    evaluate(name, &annotated(d, q)?, &opts).map(|s| s.value).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dataset, q = None, prior = 1.0))]
fn opc(dataset: &PyDataset, q: Option<&PyQTable>, prior: f64) -> PyResult<f64> {
    metric(MetricName::Opc, dataset, q, prior, 1.0)
}

#[pyfunction]
#[pyo3(signature = (dataset, q = None, prior = 1.0))]
fn soft_opc(dataset: &PyDataset, q: Option<&PyQTable>, prior: f64) -> PyResult<f64> {
    metric(MetricName::SoftOpc, dataset, q, prior, 1.0)
}

#[pyfunction]
#[pyo3(signature = (dataset, q = None, prior = 1.0))]
fn extended_opc(dataset: &PyDataset, q: Option<&PyQTable>, prior: f64) -> PyResult<f64> {
    metrics::extended_opc(&annotated(dataset, q)?, self::prior(prior)?)
        .map(|s| s.value)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dataset, q = None, gamma = 1.0))]
fn td_error(dataset: &PyDataset, q: Option<&PyQTable>, gamma: f64) -> PyResult<f64> {
    metric(MetricName::TdErr, dataset, q, 1.0, gamma)
}

#[pyfunction]
#[pyo3(signature = (dataset, q = None, gamma = 1.0))]
fn sum_advantages(dataset: &PyDataset, q: Option<&PyQTable>, gamma: f64) -> PyResult<f64> {
    metric(MetricName::SumAdv, dataset, q, 1.0, gamma)
}

#[pyfunction]
#[pyo3(signature = (dataset, q = None, gamma = 1.0))]
fn mcc_error(dataset: &PyDataset, q: Option<&PyQTable>, gamma: f64) -> PyResult<f64> {
    metric(MetricName::MccErr, dataset, q, 1.0, gamma)
}

/// OPC of raw (q, positive) pairs.
#[pyfunction]
#[pyo3(signature = (q_values, positive, prior = 1.0))]
fn opc_of_points(q_values: Vec<f64>, positive: Vec<bool>, prior: f64) -> PyResult<f64> {
    if q_values.len() != positive.len() {
        return Err(PyValueError::new_err("q_values and positive differ in length"));
    }
    let points: Vec<AnnotatedPoint> = q_values
        .iter()
        .zip(&positive)
        .map(|(&q, &pos)| AnnotatedPoint::unweighted(q, pos))
        .collect();
    opc_points(&points, self::prior(prior)?, MetricName::Opc).map_err(to_py)
}

#[pyfunction]
fn spearman(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    stats::spearman(&xs, &ys).map_err(to_py)
}

#[pyfunction]
fn r_squared(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    stats::r_squared(&xs, &ys).map_err(to_py)
}

fn summary_dict<'py>(py: Python<'py>, s: &CorrelationSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("r_squared", s.r_squared)?;
    d.set_item("spearman", s.spearman)?;
    d.set_item("n_models", s.n_models)?;
    d.set_item("n_excluded", s.n_excluded)?;
    d.set_item("note", s.note.clone())?;
    Ok(d)
}

/// Runs the correlation experiment described by a TOML config (defaults
/// when `None`). Returns `{"summaries": {metric: {...}}, "true_returns":
/// [...], "scores": {metric: [...]}}`.
#[pyfunction]
#[pyo3(signature = (config_toml = None))]
fn run_experiment<'py>(py: Python<'py>, config_toml: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = match config_toml {
        Some(text) => ExperimentConfig::from_toml(text).map_err(to_py)?,
        None => ExperimentConfig::default(),
    };
    let res = py.detach(|| harness::run_correlation_experiment(&cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    let summaries = PyDict::new(py);
    for s in &res.summaries {
        summaries.set_item(s.metric.as_str(), summary_dict(py, s)?)?;
    }
    out.set_item("summaries", summaries)?;
    out.set_item("true_returns", res.reports.iter().map(|r| r.true_return).collect::<Vec<_>>())?;
    let mut scores: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &res.reports {
        for (m, v) in &r.scores {
            scores.entry(m.as_str()).or_default().push(*v);
        }
    }
    out.set_item("scores", scores)?;
    Ok(out)
}

#[pymodule]
fn opeval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTreeEnv>()?;
    m.add_class::<PyQTable>()?;
    m.add_class::<PyDataset>()?;
    m.add("DegenerateError", m.py().get_type::<DegenerateError>())?;
    m.add_function(wrap_pyfunction!(opc, m)?)?;
    m.add_function(wrap_pyfunction!(soft_opc, m)?)?;
    m.add_function(wrap_pyfunction!(extended_opc, m)?)?;
    m.add_function(wrap_pyfunction!(td_error, m)?)?;
    m.add_function(wrap_pyfunction!(sum_advantages, m)?)?;
    m.add_function(wrap_pyfunction!(mcc_error, m)?)?;
    m.add_function(wrap_pyfunction!(opc_of_points, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(r_squared, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
