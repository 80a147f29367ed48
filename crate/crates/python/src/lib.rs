//! Python bindings: scenarios from JSON configs, the four runs, and a few exact helpers.

use anscombe_core::cli::{self, Command, Format, Overrides, RunReport, ScenarioConfig};
use anscombe_core::oracle::lambda_w_five_forms;
use anscombe_core::{Error, FiniteDistribution, MetricPoint, Space};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(anscombe, AnscombeError, PyException);

fn to_py(err: Error) -> PyErr {
    let msg = format!("[{}] {err}", err.code());
    match err {
        Error::Parse(_) | Error::Validation(_) => PyValueError::new_err(msg),
        _ => AnscombeError::new_err(msg),
    }
}

/// Outcome of one run: canonical JSON, CSV, verdict and one-line summary.
#[pyclass(frozen, module = "anscombe")]
struct Report {
    inner: RunReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn passed(&self) -> bool {
        self.inner.pass
    }

    #[getter]
    fn summary(&self) -> String {
        self.inner.summary.clone()
    }

    fn json(&self) -> PyResult<String> {
        self.inner.render(Format::Json).map_err(to_py)
    }

    fn csv(&self) -> PyResult<String> {
        self.inner.render(Format::Csv).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Report({})", self.inner.summary)
    }
}

/// A validated scenario config.
#[pyclass(frozen, module = "anscombe")]
struct Scenario {
    config: ScenarioConfig,
}

impl Scenario {
    fn run(&self, py: Python<'_>, command: Command, threads: Option<usize>) -> PyResult<Report> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t.max(1));
        }
        let pool = builder.build().map_err(|e| AnscombeError::new_err(e.to_string()))?;
        let config = &self.config;
        let inner = py.detach(|| pool.install(|| cli::run(command, config))).map_err(to_py)?;
        Ok(Report { inner })
    }
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    #[pyo3(signature = (text, seed=None, samples=None))]
    fn from_json(text: &str, seed: Option<u64>, samples: Option<usize>) -> PyResult<Self> {
        let config = cli::parse_config(text, Overrides { seed, samples }).map_err(to_py)?;
        Ok(Scenario { config })
    }

    #[staticmethod]
    #[pyo3(signature = (path, seed=None, samples=None))]
    fn from_path(path: std::path::PathBuf, seed: Option<u64>, samples: Option<usize>) -> PyResult<Self> {
        let config = cli::load_config(&path, Overrides { seed, samples }).map_err(to_py)?;
        Ok(Scenario { config })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.config.scenario.seed
    }

    #[getter]
    fn samples(&self) -> usize {
        self.config.scenario.grid.samples()
    }

    #[getter]
    fn n_window(&self) -> (u64, u64) {
        self.config.scenario.grid.n_window()
    }

    #[pyo3(signature = (threads=None))]
    fn estimate(&self, py: Python<'_>, threads: Option<usize>) -> PyResult<Report> {
        self.run(py, Command::Estimate, threads)
    }

    #[pyo3(signature = (threads=None))]
    fn verify(&self, py: Python<'_>, threads: Option<usize>) -> PyResult<Report> {
        self.run(py, Command::Verify, threads)
    }

    #[pyo3(signature = (threads=None))]
    fn oracle(&self, py: Python<'_>, threads: Option<usize>) -> PyResult<Report> {
        self.run(py, Command::Oracle, threads)
    }

    #[pyo3(signature = (threads=None))]
    fn compare(&self, py: Python<'_>, threads: Option<usize>) -> PyResult<Report> {
        self.run(py, Command::Compare, threads)
    }
}

/// Standard normal distribution function.
#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    anscombe_core::normal_cdf(x)
}

/// `(max(1, ceil((1-delta) n)), floor((1+delta) n))`.
#[pyfunction]
fn window_bounds(n: u64, delta: f64) -> (u64, u64) {
    anscombe_core::window_bounds(n, delta)
}

fn real_law(pairs: Vec<(f64, f64)>) -> PyResult<FiniteDistribution> {
    FiniteDistribution::from_weighted(pairs.into_iter().map(|(x, w)| (MetricPoint::real(x), w))).map_err(to_py)
}

/// Weak defect of `(x, weight)` laws on the real line against a target law, in
/// the order (function, enlargement, open, closed, continuity).
#[pyfunction]
#[pyo3(signature = (marginals, target, alphas=None))]
fn five_forms(
    marginals: Vec<Vec<(f64, f64)>>,
    target: Vec<(f64, f64)>,
    alphas: Option<Vec<f64>>,
) -> PyResult<[f64; 5]> {
    let laws = marginals.into_iter().map(real_law).collect::<PyResult<Vec<_>>>()?;
    let target = real_law(target)?;
    let res = lambda_w_five_forms(&Space::real_line(), &laws, &target, alphas.as_deref()).map_err(to_py)?;
    Ok(res.values())
}

#[pymodule]
fn anscombe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AnscombeError", m.py().get_type::<AnscombeError>())?;
    m.add_class::<Scenario>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(window_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(five_forms, m)?)?;
    Ok(())
}
