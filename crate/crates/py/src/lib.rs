//! Python bindings for `qpotts-core`.
//!
//! Exposes the model parameters, the closed-form observables, the exact
//! partition-function routes and one-dimensional sweeps.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qpotts_core as core;
use qpotts_core::{Axis, GridSpec, Observable, ThermoState};

fn value_error(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn state(beta: f64) -> PyResult<ThermoState> {
    ThermoState::from_beta(beta).map_err(value_error)
}

/// Model instance `(q, J, h)`.
#[pyclass(frozen, skip_from_py_object, name = "ModelParams", module = "qpotts")]
#[derive(Clone, Copy)]
pub struct PyModelParams {
    inner: core::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (q, J, h))]
    #[allow(non_snake_case)]
    fn new(q: u32, J: f64, h: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::ModelParams::new(q, J, h).map_err(value_error)?,
        })
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q()
    }

    #[getter(J)]
    fn coupling(&self) -> f64 {
        self.inner.coupling()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.field()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(q={}, J={}, h={})",
            self.inner.q(),
            self.inner.coupling(),
            self.inner.field()
        )
    }
}

/// The five observables at one point.
#[pyclass(frozen, name = "ThermoPoint", module = "qpotts")]
pub struct PyThermoPoint {
    #[pyo3(get)]
    f: f64,
    #[pyo3(get, name = "S")]
    s: f64,
    #[pyo3(get)]
    m: f64,
    #[pyo3(get)]
    chi: f64,
    #[pyo3(get, name = "C")]
    c: f64,
}

impl From<core::ThermoPoint> for PyThermoPoint {
    fn from(p: core::ThermoPoint) -> Self {
        Self {
            f: p.f,
            s: p.s,
            m: p.m,
            chi: p.chi,
            c: p.c,
        }
    }
}

#[pymethods]
impl PyThermoPoint {
    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("f", self.f)?;
        d.set_item("S", self.s)?;
        d.set_item("m", self.m)?;
        d.set_item("chi", self.chi)?;
        d.set_item("C", self.c)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "ThermoPoint(f={}, S={}, m={}, chi={}, C={})",
            self.f, self.s, self.m, self.chi, self.c
        )
    }
}

/// Two-valued transfer-matrix spectrum.
#[pyclass(frozen, name = "EigenSpectrum", module = "qpotts")]
pub struct PyEigenSpectrum {
    #[pyo3(get)]
    lambda_minor: f64,
    #[pyo3(get)]
    lambda_max: f64,
    #[pyo3(get)]
    log_lambda_max: f64,
}

#[pyfunction]
fn thermo_point(params: &PyModelParams, beta: f64) -> PyResult<PyThermoPoint> {
    Ok(core::ThermoPoint::evaluate(&params.inner, state(beta)?).into())
}

#[pyfunction]
fn free_energy(params: &PyModelParams, beta: f64) -> PyResult<f64> {
    Ok(core::free_energy(&params.inner, state(beta)?))
}

#[pyfunction]
fn entropy(params: &PyModelParams, beta: f64) -> PyResult<f64> {
    Ok(core::entropy(&params.inner, state(beta)?))
}

#[pyfunction]
fn magnetization(params: &PyModelParams, beta: f64) -> PyResult<f64> {
    Ok(core::magnetization(&params.inner, state(beta)?))
}

#[pyfunction]
fn susceptibility(params: &PyModelParams, beta: f64) -> PyResult<f64> {
    Ok(core::susceptibility(&params.inner, state(beta)?))
}

#[pyfunction]
fn heat_capacity(params: &PyModelParams, beta: f64) -> PyResult<f64> {
    Ok(core::heat_capacity(&params.inner, state(beta)?))
}

#[pyfunction]
fn magnetization_zero_point(params: &PyModelParams, beta: f64) -> PyResult<f64> {
    Ok(core::magnetization_zero_point(&params.inner, state(beta)?))
}

#[pyfunction]
fn spectrum(params: &PyModelParams, beta: f64) -> PyResult<PyEigenSpectrum> {
    let s = core::closed_form_spectrum(&params.inner, state(beta)?);
    Ok(PyEigenSpectrum {
        lambda_minor: s.lambda_minor,
        lambda_max: s.lambda_max,
        log_lambda_max: s.log_lambda_max,
    })
}

/// `ln Z_N` from the eigenvalues.
#[pyfunction]
fn log_partition(params: &PyModelParams, beta: f64, n: usize) -> PyResult<f64> {
    core::partition_function(&params.inner, state(beta)?, n).map_err(value_error)
}

/// `ln Z_N` by exhaustive enumeration.
#[pyfunction]
fn log_partition_enumerated(params: &PyModelParams, beta: f64, n: usize) -> PyResult<f64> {
    core::enumerate_partition(&params.inner, state(beta)?, n).map_err(value_error)
}

/// `ln Z_N` as the log-trace of the dense matrix power.
#[pyfunction]
fn log_partition_trace(params: &PyModelParams, beta: f64, n: usize) -> PyResult<f64> {
    core::trace_power_partition(&params.inner, state(beta)?, n).map_err(value_error)
}

/// Finite-difference check; returns `(passed, {name: relative_error})`.
#[pyfunction]
#[pyo3(signature = (params, beta, step = core::thermo::DEFAULT_FD_STEP))]
fn fd_verify<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    beta: f64,
    step: f64,
) -> PyResult<(bool, Bound<'py, PyDict>)> {
    let report = core::fd_verify(&params.inner, state(beta)?, step).map_err(value_error)?;
    let errors = PyDict::new(py);
    for (name, check) in ["S", "m", "chi", "C"].iter().zip(report.checks()) {
        errors.set_item(name, check.relative_error)?;
    }
    Ok((report.passed(), errors))
}

/// Sweep along one axis; returns a list of row dicts.
#[pyfunction]
fn sweep<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    beta: f64,
    axis: &str,
    min: f64,
    max: f64,
    steps: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let axis: Axis = axis.parse().map_err(value_error)?;
    let grid = GridSpec::new(axis, min, max, steps).map_err(value_error)?;
    let table = core::sweep_1d(&params.inner, state(beta)?, &grid).map_err(value_error)?;
    table
        .rows
        .iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item(format!("x_{axis}"), row.coords[0])?;
            d.set_item("beta", row.state.beta())?;
            d.set_item("T", row.state.temperature())?;
            d.set_item("h", row.params.field())?;
            d.set_item("J", row.params.coupling())?;
            d.set_item("q", row.params.q())?;
            d.set_item("f", row.point.f)?;
            d.set_item("S", row.point.s)?;
            d.set_item("m", row.point.m)?;
            d.set_item("chi", row.point.chi)?;
            d.set_item("C", row.point.c)?;
            Ok(d)
        })
        .collect()
}

/// Grid maximum of an observable along one axis, as `(coordinate, value)`.
#[pyfunction]
#[pyo3(signature = (params, beta, axis, min, max, steps, observable = "chi", refine = false))]
#[allow(clippy::too_many_arguments)]
fn find_peak(
    params: &PyModelParams,
    beta: f64,
    axis: &str,
    min: f64,
    max: f64,
    steps: usize,
    observable: &str,
    refine: bool,
) -> PyResult<(f64, f64)> {
    let axis: Axis = axis.parse().map_err(value_error)?;
    let observable: Observable = observable.parse().map_err(value_error)?;
    let grid = GridSpec::new(axis, min, max, steps).map_err(value_error)?;
    let table = core::sweep_1d(&params.inner, state(beta)?, &grid).map_err(value_error)?;
    if refine {
        core::refine_peak(&table, observable, 1e-12).map_err(value_error)
    } else {
        core::find_peak(&table, observable).map_err(value_error)
    }
}

#[pymodule]
fn qpotts(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyThermoPoint>()?;
    m.add_class::<PyEigenSpectrum>()?;
    m.add_function(wrap_pyfunction!(thermo_point, m)?)?;
    m.add_function(wrap_pyfunction!(free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(magnetization, m)?)?;
    m.add_function(wrap_pyfunction!(susceptibility, m)?)?;
    m.add_function(wrap_pyfunction!(heat_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(magnetization_zero_point, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(log_partition, m)?)?;
    m.add_function(wrap_pyfunction!(log_partition_enumerated, m)?)?;
    m.add_function(wrap_pyfunction!(log_partition_trace, m)?)?;
    m.add_function(wrap_pyfunction!(fd_verify, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(find_peak, m)?)?;
    Ok(())
}
