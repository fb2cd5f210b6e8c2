//! Python bindings: instances, regularizers, the Bregman projection, learners
//! and the experiment driver. Costs cross the boundary as lists of
//! `(pair, cost)` tuples, with `pair = s * A + a`.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ssp_omd::harness::{self, ExperimentConfig, InstanceSpec, LearnerSpec};
use ssp_omd::learners::Step;
use ssp_omd::mdp::{fast_policy_and_diameter, MdpDocument};
use ssp_omd::{omd, CostVector, SolverConfig, SspError, SspMdp};

fn err(e: SspError) -> PyErr {
    match e {
        SspError::NonConvergence { .. } | SspError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cost_vector(episode: usize, entries: Vec<(usize, f64)>, num_pairs: usize) -> PyResult<CostVector> {
    if let Some(&(i, _)) = entries.iter().find(|e| e.0 >= num_pairs) {
        return Err(PyValueError::new_err(format!("pair {i} out of range")));
    }
    CostVector::new(episode, entries).map_err(err)
}

#[pyclass(name = "Mdp", frozen, module = "ssp_omd_py")]
struct PyMdp {
    inner: Arc<SspMdp>,
}

#[pymethods]
impl PyMdp {
    /// Builds an MDP from its JSON document.
    #[staticmethod]
    fn from_json(doc: &str) -> PyResult<Self> {
        let doc: MdpDocument = serde_json::from_str(doc).map_err(json_err)?;
        Ok(Self {
            inner: Arc::new(doc.to_mdp().map_err(err)?),
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&MdpDocument::from_mdp(&self.inner, None)).map_err(json_err)
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    #[getter]
    fn num_pairs(&self) -> usize {
        self.inner.num_pairs()
    }

    #[getter]
    fn start_state(&self) -> usize {
        self.inner.start_state()
    }

    fn pair(&self, s: usize, a: usize) -> PyResult<usize> {
        if s >= self.inner.num_states() || a >= self.inner.num_actions() {
            return Err(PyValueError::new_err("state or action out of range"));
        }
        Ok(self.inner.pair(s, a))
    }

    /// `(diameter, hitting times of the fast policy)`.
    fn fast_policy(&self) -> PyResult<(f64, Vec<f64>)> {
        let f = fast_policy_and_diameter(&self.inner).map_err(err)?;
        Ok((f.diameter, f.hitting_times))
    }

    fn __repr__(&self) -> String {
        format!("Mdp(states={}, actions={})", self.inner.num_states(), self.inner.num_actions())
    }
}

/// A generated or loaded instance with its cost process.
#[pyclass(name = "Instance", frozen, module = "ssp_omd_py")]
struct PyInstance {
    inner: harness::Instance,
    spec: InstanceSpec,
}

#[pymethods]
impl PyInstance {
    /// `spec` is the instance part of an experiment config, as JSON.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec: InstanceSpec = serde_json::from_str(spec).map_err(json_err)?;
        Ok(Self {
            inner: harness::Instance::load(&spec).map_err(err)?,
            spec,
        })
    }

    #[getter]
    fn mdp(&self) -> PyMdp {
        PyMdp {
            inner: self.inner.mdp.clone(),
        }
    }

    fn meta_json(&self) -> PyResult<Option<String>> {
        self.inner.meta.as_ref().map(|m| serde_json::to_string(m).map_err(json_err)).transpose()
    }

    fn costs(&self, episodes: usize, seed: u64) -> PyResult<Vec<Vec<(usize, f64)>>> {
        let cs = self.inner.costs(episodes, seed).map_err(err)?;
        Ok(cs.into_iter().map(|c| c.entries().to_vec()).collect())
    }

    fn spec_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.spec).map_err(json_err)
    }
}

#[pyclass(name = "Regularizer", frozen, skip_from_py_object, module = "ssp_omd_py")]
#[derive(Clone, Copy)]
struct PyRegularizer {
    inner: ssp_omd::Regularizer,
}

#[pymethods]
impl PyRegularizer {
    #[staticmethod]
    fn lr_norm(p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ssp_omd::Regularizer::lr_norm(p).map_err(err)?,
        })
    }

    #[staticmethod]
    fn negative_entropy() -> Self {
        Self {
            inner: ssp_omd::Regularizer::NegativeEntropy,
        }
    }

    fn value(&self, q: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&q).map_err(err)
    }

    fn gradient(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.gradient(&q).map_err(err)
    }

    fn bregman(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.bregman(&x, &y).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Bregman projection of `q_prime` onto the occupancy polytope with cap `bound`.
/// Returns the projected vector and a report dict.
#[pyfunction]
fn project<'py>(
    py: Python<'py>,
    reg: &PyRegularizer,
    q_prime: Vec<f64>,
    mdp: &PyMdp,
    bound: f64,
) -> PyResult<(Vec<f64>, Bound<'py, PyDict>)> {
    let (q, _, rep) = omd::project(&reg.inner, &q_prime, &mdp.inner, bound, &SolverConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("iterations", rep.iterations)?;
    d.set_item("kkt_residual", rep.kkt_residual)?;
    d.set_item("flow_residual", rep.flow_residual)?;
    d.set_item("converged", rep.converged)?;
    d.set_item("dual_objective", rep.dual_objective)?;
    Ok((q.into_values(), d))
}

/// Any learner described by a learner spec (JSON), bound to an instance.
#[pyclass(name = "Learner", unsendable, module = "ssp_omd_py")]
struct PyLearner {
    inner: Box<dyn ssp_omd::learners::Learner + Send>,
    num_pairs: usize,
    episode: usize,
}

fn step_dict<'py>(py: Python<'py>, s: &Step) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("loss", s.loss)?;
    d.set_item("realized_loss", s.realized_loss)?;
    d.set_item("penalty_cert", s.penalty_cert)?;
    d.set_item("stability_cert", s.stability_cert)?;
    d.set_item("proj_iters", s.proj_iters)?;
    d.set_item("kkt_residual", s.kkt_residual)?;
    d.set_item("interval_b", s.interval_b)?;
    d.set_item("sampled_instance", s.sampled_instance)?;
    Ok(d)
}

#[pymethods]
impl PyLearner {
    /// `costs` is only consulted by specs that read the observed sparsity.
    #[new]
    #[pyo3(signature = (spec, instance, costs, seed = 0))]
    fn new(spec: &str, instance: &PyInstance, costs: Vec<Vec<(usize, f64)>>, seed: u64) -> PyResult<Self> {
        let spec: LearnerSpec = serde_json::from_str(spec).map_err(json_err)?;
        let n = instance.inner.mdp.num_pairs();
        let costs = costs
            .into_iter()
            .enumerate()
            .map(|(k, c)| cost_vector(k + 1, c, n))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = spec
            .build(&instance.inner, &costs, seed, SolverConfig::default())
            .map_err(err)?;
        Ok(Self {
            inner,
            num_pairs: n,
            episode: 0,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    /// Row-major `S x A` action probabilities for the next episode.
    fn policy(&mut self) -> Vec<f64> {
        self.inner.policy().as_slice().to_vec()
    }

    fn set_comparator(&mut self, occupancy: Vec<f64>) -> PyResult<()> {
        if occupancy.len() != self.num_pairs {
            return Err(PyValueError::new_err("occupancy must have one entry per pair"));
        }
        self.inner.set_comparator(Arc::new(occupancy));
        Ok(())
    }

    fn observe<'py>(&mut self, py: Python<'py>, cost: Vec<(usize, f64)>) -> PyResult<Bound<'py, PyDict>> {
        let c = cost_vector(self.episode + 1, cost, self.num_pairs)?;
        let step = self.inner.observe(&c).map_err(err)?;
        self.episode += 1;
        step_dict(py, &step)
    }
}

/// Best deterministic proper policy for a whole cost stream.
#[pyfunction]
fn best_in_hindsight<'py>(
    py: Python<'py>,
    mdp: &PyMdp,
    costs: Vec<Vec<(usize, f64)>>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = mdp.inner.num_pairs();
    let costs = costs
        .into_iter()
        .enumerate()
        .map(|(k, c)| cost_vector(k + 1, c, n))
        .collect::<PyResult<Vec<_>>>()?;
    let cmp = harness::best_in_hindsight(&mdp.inner, &costs).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("total", cmp.total)?;
    d.set_item("losses", cmp.losses)?;
    d.set_item("occupancy", cmp.occupancy)?;
    d.set_item("hitting_time", cmp.hitting_time)?;
    Ok(d)
}

/// Runs an experiment config (JSON) and returns the summary as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config).map_err(json_err)?;
    let out = py.detach(|| harness::run_experiment(&cfg)).map_err(err)?;
    serde_json::to_string(&out.summary).map_err(json_err)
}

#[pyfunction]
#[pyo3(signature = (p, d, n = None, trials = 10_000, seed = 0))]
fn rw_max_expectation(p: f64, d: usize, n: Option<u64>, trials: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let n = n.unwrap_or_else(|| harness::rw_min_steps(p, d));
    let e = harness::rw_max_expectation(n, p, d, trials, seed).map_err(err)?;
    Ok((e.estimate, e.std_error, e.bound))
}

#[pymodule]
fn ssp_omd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMdp>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRegularizer>()?;
    m.add_class::<PyLearner>()?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(best_in_hindsight, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(rw_max_expectation, m)?)?;
    Ok(())
}
