//! Python bindings: graph/weight/objective construction, the experiment
//! runner, spectral certification and the rate-fit helpers. Vectors and
//! matrices cross the boundary as plain lists.

use std::collections::HashMap;

use nalgebra::{DMatrix, RowDVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dngd::error::Error;
use dngd::{algorithms, analysis, graphs, harness, linalg, objectives, schedule, weights};

fn pyerr(e: Error) -> PyErr {
    match e {
        Error::InvalidParam(_) | Error::Validation { .. } | Error::Parse { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[pyclass(name = "Graph", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: graphs::Graph,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    #[pyo3(signature = (n, p, seed, max_retries = 100))]
    fn erdos_renyi(n: usize, p: f64, seed: u64, max_retries: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = graphs::gen_erdos_renyi(n, p, &mut rng, max_retries).map_err(pyerr)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn k_cycle(n: usize, k: usize) -> PyResult<Self> {
        Ok(Self {
            inner: graphs::gen_k_cycle(n, k).map_err(pyerr)?,
        })
    }

    #[staticmethod]
    fn grid2d(rows: usize, cols: usize) -> PyResult<Self> {
        Ok(Self {
            inner: graphs::gen_grid2d(rows, cols).map_err(pyerr)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    /// Uniform subsample keeping round((1 - remove_fraction) * edges) edges.
    fn sample_time_varying(&self, remove_fraction: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            inner: graphs::sample_time_varying(&self.inner, remove_fraction, &mut rng),
        }
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list_text()
    }

    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: graphs::Graph::from_edge_list_text(text).map_err(pyerr)?,
        })
    }
}

#[pyclass(name = "WeightMatrix", skip_from_py_object)]
#[derive(Clone)]
struct PyWeightMatrix {
    inner: weights::WeightMatrix,
}

#[pymethods]
impl PyWeightMatrix {
    #[staticmethod]
    fn laplacian(graph: &PyGraph) -> PyResult<Self> {
        Ok(Self {
            inner: weights::laplacian_weights(&graph.inner).map_err(pyerr)?,
        })
    }

    #[staticmethod]
    fn metropolis(graph: &PyGraph) -> Self {
        Self {
            inner: weights::metropolis_weights(&graph.inner),
        }
    }

    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = rows.len();
        let m = DMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| rows[i][j]);
        Ok(Self {
            inner: weights::WeightMatrix::try_from_matrix(m).map_err(pyerr)?,
        })
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.matrix())
    }
}

/// Second-largest singular value of an explicit doubly stochastic matrix.
#[pyfunction]
fn second_singular(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| rows[i][j]);
    weights::second_singular(&m).map_err(pyerr)
}

#[pyclass(name = "ObjectiveSuite", skip_from_py_object)]
#[derive(Clone)]
struct PySuite {
    inner: objectives::ObjectiveSuite,
}

#[pymethods]
impl PySuite {
    #[staticmethod]
    #[pyo3(signature = (n, seed, samples_per_agent = 50, dim = 3))]
    fn case1(n: usize, seed: u64, samples_per_agent: usize, dim: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            inner: objectives::gen_case1(n, samples_per_agent, dim, &mut rng).map_err(pyerr)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, samples_per_agent = 100, dim = 3))]
    fn case2(n: usize, seed: u64, samples_per_agent: usize, dim: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            inner: objectives::gen_case2(n, samples_per_agent, dim, &mut rng).map_err(pyerr)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, dim = 4))]
    fn case3(n: usize, seed: u64, dim: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            inner: objectives::gen_case3(n, dim, &mut rng).map_err(pyerr)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn l(&self) -> f64 {
        self.inner.l()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn fstar(&self) -> f64 {
        self.inner.fstar()
    }

    #[getter]
    fn xstar(&self) -> Vec<f64> {
        self.inner.xstar().iter().copied().collect()
    }

    fn local_value(&self, i: usize, x: Vec<f64>) -> PyResult<f64> {
        self.inner
            .local_value(i, &RowDVector::from_vec(x))
            .map_err(pyerr)
    }

    fn local_grad(&self, i: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .local_grad(i, &RowDVector::from_vec(x))
            .map_err(pyerr)?
            .iter()
            .copied()
            .collect())
    }

    fn global_value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner
            .global_value(&RowDVector::from_vec(x))
            .map_err(pyerr)
    }

    fn global_grad(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .global_grad(&RowDVector::from_vec(x))
            .map_err(pyerr)?
            .iter()
            .copied()
            .collect())
    }

    fn solve_reference(&self, tol: f64) -> PyResult<(Vec<f64>, f64)> {
        let (x, f) = objectives::solve_reference(&self.inner, tol).map_err(pyerr)?;
        Ok((x.iter().copied().collect(), f))
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: objectives::ObjectiveSuite::from_text(text).map_err(pyerr)?,
        })
    }
}

/// Momentum recursion: unique root in (0, 1) of
/// `a'^2 = (eta_next/eta_t) (1 - a') a^2`.
#[pyfunction]
fn next_alpha(alpha_t: f64, eta_t: f64, eta_next: f64) -> PyResult<f64> {
    schedule::next_alpha(alpha_t, eta_t, eta_next).map_err(pyerr)
}

#[pyfunction]
fn sc_step_bound(sigma: f64, l: f64, mu: f64) -> PyResult<f64> {
    algorithms::bounds::sc_step_bound(sigma, l, mu).map_err(pyerr)
}

#[pyfunction]
fn nsc_fixed_step_bound(sigma: f64, l: f64, mu: f64) -> PyResult<f64> {
    algorithms::bounds::nsc_fixed_step_bound(sigma, l, mu).map_err(pyerr)
}

/// General-convex gain matrix: returns (rows, spectral_radius, perron_vec).
#[pyfunction]
fn gain_matrix_nsc(eta: f64, sigma: f64, l: f64) -> PyResult<(Vec<Vec<f64>>, f64, Vec<f64>)> {
    let g = analysis::gain_matrix_nsc(eta, sigma, l).map_err(pyerr)?;
    let rows = (0..3)
        .map(|i| (0..3).map(|j| g.m[(i, j)]).collect())
        .collect();
    Ok((rows, g.theta, g.chi.iter().copied().collect()))
}

/// Strongly convex gain matrix: returns (rows, spectral_radius).
#[pyfunction]
fn gain_matrix_sc(eta: f64, sigma: f64, l: f64, mu: f64) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let g = analysis::gain_matrix_sc(eta, sigma, l, mu).map_err(pyerr)?;
    let rows = (0..3)
        .map(|i| (0..3).map(|j| g.m[(i, j)]).collect())
        .collect();
    Ok((rows, g.rho))
}

#[pyclass(name = "CertOutcome")]
struct PyCertOutcome {
    #[pyo3(get)]
    name: String,
    #[pyo3(get)]
    ok: bool,
    #[pyo3(get)]
    samples: usize,
    #[pyo3(get)]
    checks: usize,
    #[pyo3(get)]
    violations: Vec<String>,
    #[pyo3(get)]
    notes: HashMap<String, f64>,
}

impl From<analysis::CertReport> for PyCertOutcome {
    fn from(rep: analysis::CertReport) -> Self {
        Self {
            name: rep.name.clone(),
            ok: rep.ok(),
            samples: rep.samples,
            checks: rep.checks,
            violations: rep
                .violations
                .iter()
                .map(|v| format!("{}: lhs {:e} > rhs {:e}", v.check, v.lhs, v.rhs))
                .collect(),
            notes: rep.notes.iter().cloned().collect(),
        }
    }
}

/// Certify a bound family: `"5"` (strongly convex gain radius), `"8-10"`
/// (general-convex gain eigenstructure), `"12"` (momentum decay).
#[pyfunction]
#[pyo3(signature = (family, sigma = 0.6, l = 1.0, mu = 0.01, samples = 200, eta = 0.125, t0 = 1, beta = 0.61, horizon = 10_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn certify(
    family: &str,
    sigma: f64,
    l: f64,
    mu: f64,
    samples: usize,
    eta: f64,
    t0: u64,
    beta: f64,
    horizon: u64,
    seed: u64,
) -> PyResult<PyCertOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rep = match family {
        "5" => analysis::certify_sc_gain(sigma, l, mu, samples, &mut rng),
        "8-10" => analysis::certify_nsc_gain(sigma, l, samples, &mut rng),
        "12" => analysis::certify_momentum_decay(eta, t0, beta, l, horizon),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown bound family `{other}` (use \"5\", \"8-10\" or \"12\")"
            )))
        }
    }
    .map_err(pyerr)?;
    Ok(rep.into())
}

#[pyclass(name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    sigma: f64,
    #[pyo3(get)]
    l: f64,
    #[pyo3(get)]
    mu: f64,
    #[pyo3(get)]
    fstar: f64,
    inner: harness::ExperimentResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.traces.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Trace columns for one algorithm as a dict of lists.
    fn trace(&self, label: &str) -> PyResult<HashMap<String, Vec<f64>>> {
        let (_, tr) = self
            .inner
            .traces
            .iter()
            .find(|(l, _)| l == label)
            .ok_or_else(|| PyValueError::new_err(format!("no trace for `{label}`")))?;
        let mut out: HashMap<String, Vec<f64>> = HashMap::new();
        out.insert("t".into(), tr.iter().map(|r| r.t as f64).collect());
        out.insert(
            "avg_obj_err".into(),
            tr.iter().map(|r| r.avg_obj_err).collect(),
        );
        out.insert(
            "max_individual_err".into(),
            tr.iter().map(|r| r.max_individual_err).collect(),
        );
        out.insert(
            "consensus_y".into(),
            tr.iter().map(|r| r.consensus_y).collect(),
        );
        out.insert(
            "consensus_s".into(),
            tr.iter().map(|r| r.consensus_s).collect(),
        );
        out.insert("grad_norm".into(), tr.iter().map(|r| r.grad_norm).collect());
        out.insert("eta_t".into(), tr.iter().map(|r| r.eta_t).collect());
        out.insert("alpha_t".into(), tr.iter().map(|r| r.alpha_t).collect());
        out.insert(
            "comm_count".into(),
            tr.iter().map(|r| r.comm_count as f64).collect(),
        );
        Ok(out)
    }

    fn summary(&self, label: &str) -> PyResult<HashMap<String, f64>> {
        let s = self
            .inner
            .summaries
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| PyValueError::new_err(format!("no summary for `{label}`")))?;
        let mut out = HashMap::new();
        out.insert("final_avg_obj_err".into(), s.final_avg_err);
        out.insert("final_max_individual_err".into(), s.final_max_err);
        out.insert("diverged".into(), if s.diverged { 1.0 } else { 0.0 });
        if let Some(r) = s.linear_rate {
            out.insert("linear_rate".into(), r);
        }
        if let Some(r2) = s.linear_r2 {
            out.insert("linear_r2".into(), r2);
        }
        if let Some(sl) = s.loglog_slope {
            out.insert("loglog_slope".into(), sl);
        }
        out.insert("comm_total".into(), s.comm_total as f64);
        Ok(out)
    }
}

/// Parse a TOML experiment config, run it, return the in-memory result.
#[pyfunction]
fn run_experiment(config_text: &str) -> PyResult<PyRunResult> {
    let cfg = harness::parse_config(config_text).map_err(pyerr)?;
    let result = harness::run(&cfg).map_err(pyerr)?;
    Ok(PyRunResult {
        sigma: result.sigma,
        l: result.l,
        mu: result.mu,
        fstar: result.fstar,
        inner: result,
    })
}

/// Run a config and emit the CSV trace files to a directory.
#[pyfunction]
fn run_experiment_to_dir(config_text: &str, out_dir: &str) -> PyResult<()> {
    let cfg = harness::parse_config(config_text).map_err(pyerr)?;
    let result = harness::run(&cfg).map_err(pyerr)?;
    harness::emit_csv(&result, std::path::Path::new(out_dir)).map_err(pyerr)
}

/// Least-squares slope of log(err) against log(t).
#[pyfunction]
fn fit_loglog(ts: Vec<f64>, errs: Vec<f64>) -> PyResult<f64> {
    if ts.len() != errs.len() || ts.len() < 3 {
        return Err(PyValueError::new_err("need >= 3 matching points"));
    }
    if ts.iter().any(|&t| t <= 0.0) || errs.iter().any(|&e| e <= 0.0) {
        return Err(PyValueError::new_err("points must be positive"));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    Ok(linalg::fit_line(&xs, &ys).0)
}

/// Least-squares geometric rate: returns (rate, r_squared).
#[pyfunction]
fn fit_linear_rate(ts: Vec<f64>, errs: Vec<f64>) -> PyResult<(f64, f64)> {
    if ts.len() != errs.len() || ts.len() < 3 {
        return Err(PyValueError::new_err("need >= 3 matching points"));
    }
    if errs.iter().any(|&e| e <= 0.0) {
        return Err(PyValueError::new_err("errors must be positive"));
    }
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (slope, _, r2) = linalg::fit_line(&ts, &ys);
    Ok((slope.exp(), r2))
}

/// Names of all shipped step-size presets.
#[pyfunction]
fn preset_names() -> Vec<String> {
    harness::PRESETS.iter().map(|p| p.name.to_string()).collect()
}

#[pymodule]
fn dngd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyWeightMatrix>()?;
    m.add_class::<PySuite>()?;
    m.add_class::<PyCertOutcome>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(second_singular, m)?)?;
    m.add_function(wrap_pyfunction!(next_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(sc_step_bound, m)?)?;
    m.add_function(wrap_pyfunction!(nsc_fixed_step_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gain_matrix_nsc, m)?)?;
    m.add_function(wrap_pyfunction!(gain_matrix_sc, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_to_dir, m)?)?;
    m.add_function(wrap_pyfunction!(fit_loglog, m)?)?;
    m.add_function(wrap_pyfunction!(fit_linear_rate, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    Ok(())
}
