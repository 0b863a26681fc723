//! Python bindings: zoo metrics, spray data, transport, rank certificates and full runs.

use finsler_rigidity::distribution::{dh_dimension, GeneratorBudget, DEFAULT_TAU};
use finsler_rigidity::dynamics::{geodesic, parallel_transport, CurveOnM, IntegratorConfig};
use finsler_rigidity::error::Error;
use finsler_rigidity::geometry::{evaluate_metric, fundamental_tensor, spray_coefficients, FinslerMetric, SlitTangentPoint};
use finsler_rigidity::run::{run as run_config, RunConfig};
use finsler_rigidity::zoo::r2::{r2_rank_map, R2Grid};
use finsler_rigidity::zoo::{catalog, make_metric};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn from_json<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_json(py: Python<'_>, obj: Option<&Bound<'_, PyDict>>) -> PyResult<serde_json::Value> {
    let Some(obj) = obj else {
        return Ok(serde_json::Value::Null);
    };
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A metric from the built-in catalog.
#[pyclass(name = "Metric", frozen)]
struct PyMetric {
    inner: FinslerMetric,
}

impl PyMetric {
    fn point(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<SlitTangentPoint> {
        let p = SlitTangentPoint::new(x, y).map_err(py_err)?;
        self.inner.validate(&p).map_err(py_err)?;
        Ok(p)
    }
}

#[pymethods]
impl PyMetric {
    /// `Metric("riemannian_sphere", radius=1.0)`; see `zoo_catalog()` for names.
    #[new]
    #[pyo3(signature = (name, **params))]
    fn new(py: Python<'_>, name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let params = to_json(py, params)?;
        Ok(PyMetric {
            inner: make_metric(name, params).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    /// `F(x, y)`.
    fn finsler(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        evaluate_metric(&self.inner, &self.point(x, y)?).map_err(py_err)
    }

    /// Fundamental tensor `g_ij(x, y)` as nested lists.
    fn fundamental_tensor(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let g = fundamental_tensor(&self.inner, &self.point(x, y)?).map_err(py_err)?;
        Ok(g.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// Spray coefficients `Gⁱ`.
    fn spray(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = spray_coefficients(&self.inner, &self.point(x, y)?).map_err(py_err)?;
        Ok(s.g.iter().copied().collect())
    }

    /// Nonlinear connection `Nⁱⱼ`, row `i`.
    fn connection(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let s = spray_coefficients(&self.inner, &self.point(x, y)?).map_err(py_err)?;
        Ok(s.n.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// Geodesic with initial data `(x, v)` followed for time `t`; returns `(x(t), ẋ(t))`.
    fn geodesic(&self, x: Vec<f64>, v: Vec<f64>, t: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let q = geodesic(&self.inner, &self.point(x, v)?, t, &IntegratorConfig::default()).map_err(py_err)?;
        Ok((q.x, q.y))
    }

    /// Parallel transport of `y0` along a curve given as `circle:c:r[:cw]`,
    /// `rectangle:p:a,b` or `polygon:v1;v2;…`.
    fn transport(&self, curve: &str, y0: Vec<f64>) -> PyResult<Vec<f64>> {
        let c = CurveOnM::parse(curve, self.inner.dimension()).map_err(py_err)?;
        parallel_transport(&self.inner, &c, &y0, &IntegratorConfig::default()).map_err(py_err)
    }

    /// Rank certificate at `(x, y)` as a dict.
    #[pyo3(signature = (x, y, seed = 0, word_count = 32, bracket_depth = 3, tau = DEFAULT_TAU))]
    fn dh_dimension<'py>(
        &self,
        py: Python<'py>,
        x: Vec<f64>,
        y: Vec<f64>,
        seed: u64,
        word_count: usize,
        bracket_depth: usize,
        tau: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = self.point(x, y)?;
        let budget = GeneratorBudget {
            seed,
            word_count,
            bracket_depth,
            ..Default::default()
        };
        budget.validate().map_err(py_err)?;
        let cert = py.detach(|| dh_dimension(&self.inner, &p, &budget, tau)).map_err(py_err)?;
        from_json(py, &cert)
    }

    fn __repr__(&self) -> String {
        format!("Metric({:?}, n={})", self.inner.name, self.inner.dimension())
    }
}

/// Runs a full analysis from a JSON configuration string; returns the report dict.
#[pyfunction]
fn run<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig::from_json(config_json).map_err(py_err)?;
    let out = py.detach(|| run_config(&cfg)).map_err(py_err)?;
    from_json(py, &out.report)
}

/// `(x, y, rank)` triples of the planar subspace-field example on an `nx × ny` grid.
#[pyfunction]
#[pyo3(signature = (nx = 41, ny = 41))]
fn r2_rank_grid(nx: usize, ny: usize) -> PyResult<Vec<(f64, f64, usize)>> {
    let grid = R2Grid {
        nx,
        ny,
        ..Default::default()
    };
    Ok(r2_rank_map(&grid).map_err(py_err)?.into_iter().map(|p| (p.x, p.y, p.rank)).collect())
}

/// The metric catalog as a list of dicts.
#[pyfunction]
fn zoo_catalog(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    from_json(py, &catalog())
}

#[pymodule]
#[pyo3(name = "finsler_rigidity")]
fn finsler_rigidity_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(r2_rank_grid, m)?)?;
    m.add_function(wrap_pyfunction!(zoo_catalog, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
