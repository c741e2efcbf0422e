use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use ltb_core::geometry::SpacetimePoint;
use ltb_core::{Error, GammaTerm, NumericSettings, StepControl};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::InvalidModel { .. }
        | Error::OutOfDomain { .. }
        | Error::NonPositiveK { .. }
        | Error::PostSingular { .. }
        | Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Round-trips a serializable value through Python's json module.
fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn settings_from(json: Option<&str>) -> PyResult<NumericSettings> {
    match json {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("settings: {e}"))),
        None => Ok(NumericSettings::default()),
    }
}

/// A validated collapse model with k(r) = 1 - a r^n + sum(c r^p).
#[pyclass(module = "ltb_py", frozen)]
struct ModelParams {
    inner: ltb_core::ModelParams,
}

#[pymethods]
impl ModelParams {
    #[new]
    #[pyo3(signature = (n, a, gamma = Vec::new(), r_max = 0.1))]
    fn new(n: u32, a: f64, gamma: Vec<(u32, f64)>, r_max: f64) -> PyResult<Self> {
        let gamma = gamma.into_iter().map(GammaTerm::from).collect();
        let inner = ltb_core::ModelParams::new(n, a, gamma, r_max).map_err(to_py_err)?;
        Ok(ModelParams { inner })
    }

    /// Loads a JSON model file.
    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = ltb_core::load_model_config(&path).map_err(to_py_err)?;
        Ok(ModelParams { inner })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.inner.r_max()
    }

    fn k(&self, r: f64) -> PyResult<f64> {
        self.inner.k(r).map_err(to_py_err)
    }

    fn singularity_time(&self, r: f64) -> PyResult<f64> {
        self.inner.singularity_time(r).map_err(to_py_err)
    }

    fn horizon_time(&self, r: f64) -> PyResult<f64> {
        self.inner.horizon_time(r).map_err(to_py_err)
    }

    fn area_radius(&self, r: f64, t: f64) -> PyResult<f64> {
        self.inner.area_radius(SpacetimePoint { r, t }).map_err(to_py_err)
    }

    fn phi(&self, r: f64, t: f64) -> PyResult<f64> {
        ltb_core::phi(&self.inner, SpacetimePoint { r, t }).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("ModelParams(n={}, a={}, r_max={})", self.inner.n(), self.inner.a(), self.inner.r_max())
    }
}

#[pyfunction]
fn critical_constants(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_python(py, &ltb_core::critical_constants())
}

/// Roots of the tangent quartic for the cubic profile.
#[pyfunction]
fn solve_roots(py: Python<'_>, a: f64) -> PyResult<Bound<'_, PyAny>> {
    let rep = ltb_core::solve_roots(a);
    let regime = rep.regime().as_str();
    let out = to_python(py, &rep)?;
    out.set_item("regime", regime)?;
    Ok(out)
}

#[pyfunction]
fn classify_analytic(py: Python<'_>, n: u32, a: f64) -> PyResult<Bound<'_, PyAny>> {
    let v = ltb_core::classify_analytic(n, a).map_err(to_py_err)?;
    to_python(py, &v)
}

/// Full analytic plus numeric classification. `settings` is an optional JSON
/// object overriding the numeric defaults.
#[pyfunction]
#[pyo3(signature = (params, settings = None))]
fn classify<'py>(py: Python<'py>, params: &ModelParams, settings: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let settings = settings_from(settings)?;
    let report = py.detach(|| ltb_core::classify(&params.inner, &settings));
    to_python(py, &report)
}

type Shot<'py> = (Bound<'py, PyAny>, Vec<(f64, f64, f64)>, String);

/// Forward shot from the central singularity. Returns (start, samples,
/// termination) with samples as (r, t, t - 1) tuples.
#[pyfunction]
#[pyo3(signature = (params, epsilon = 1e-6, offset = 0.0, rtol = 1e-10))]
fn shoot<'py>(
    py: Python<'py>,
    params: &ModelParams,
    epsilon: f64,
    offset: f64,
    rtol: f64,
) -> PyResult<Shot<'py>> {
    let start = ltb_core::singular_start(&params.inner)
        .map_err(to_py_err)?
        .with_epsilon(epsilon)
        .with_offset(offset);
    let ctl = StepControl { rtol, ..StepControl::default() };
    let path = py
        .detach(|| ltb_core::integrate_from_singularity(&params.inner, start, params.inner.r_max(), &ctl))
        .map_err(to_py_err)?;
    let samples = path.samples.iter().map(|s| (s.r, s.t, s.offset)).collect();
    Ok((to_python(py, &start)?, samples, path.termination.label().to_string()))
}

/// Backward probe from (r1, t1); returns t at r_floor.
#[pyfunction]
#[pyo3(signature = (params, r1, t1, r_floor = 1e-7))]
fn backward_probe(py: Python<'_>, params: &ModelParams, r1: f64, t1: f64, r_floor: f64) -> PyResult<f64> {
    py.detach(|| ltb_core::backward_probe(&params.inner, r1, t1, r_floor))
        .map_err(to_py_err)
}

/// Power-law sweep over `n_values` x [a_min, a_max]; returns CSV text.
#[pyfunction]
#[pyo3(signature = (n_values, a_min, a_max, a_steps, log_spacing = true, workers = None))]
fn sweep_csv(
    py: Python<'_>,
    n_values: Vec<u32>,
    a_min: f64,
    a_max: f64,
    a_steps: usize,
    log_spacing: bool,
    workers: Option<usize>,
) -> PyResult<String> {
    let grid = ltb_core::SweepGrid {
        n_values,
        a_min,
        a_max,
        a_steps,
        spacing: if log_spacing {
            ltb_core::Spacing::Logarithmic
        } else {
            ltb_core::Spacing::Linear
        },
    };
    let result = py
        .detach(|| ltb_core::run_sweep(&grid, &ltb_core::SweepSettings::default(), workers))
        .map_err(to_py_err)?;
    Ok(ltb_core::sweep::to_csv(&result))
}

#[pymodule]
fn ltb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ModelParams>()?;
    m.add_function(wrap_pyfunction!(critical_constants, m)?)?;
    m.add_function(wrap_pyfunction!(solve_roots, m)?)?;
    m.add_function(wrap_pyfunction!(classify_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(shoot, m)?)?;
    m.add_function(wrap_pyfunction!(backward_probe, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
