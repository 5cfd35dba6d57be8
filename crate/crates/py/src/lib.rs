//! Python bindings. Verdicts and reports cross the boundary as plain dicts
//! (through their JSON form); grid functions as the `Grid` class.

use concaflow::concavity::{check_f_concavity, check_log_concavity, check_quasi_concavity, f_concave_envelope};
use concaflow::criterion::{dhf_criterion, plaplace_initial_rate, pm_initial_rate, semilinear_criterion};
use concaflow::experiment::{run, ExperimentSpec};
use concaflow::flow::{dirichlet_cn, heat_line, hot_h, hot_inverse, semilinear_imex_at};
use concaflow::hierarchy::{ha_approximant, ha_epsilon, is_weaker, order_chain, DEFAULT_TOL};
use concaflow::{AdmissibleFunction, GridFunction};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyList;
use serde::Serialize;
use std::path::Path;

fn err(e: concaflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable value into Python objects via `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An admissible function, built from `phi:<α>`, `lalpha:<α>`, `hot:<a|inf>`
/// or `table:<path>`.
#[pyclass(name = "Family", frozen)]
struct PyFamily(AdmissibleFunction);

#[pymethods]
impl PyFamily {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PyFamily).map_err(err)
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    /// Right end of the domain `[0, a)`.
    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    /// The range `J_F` as `(lo, hi)`.
    #[getter]
    fn j(&self) -> (f64, f64) {
        self.0.j()
    }

    #[getter]
    fn limit_at_zero_is_neg_inf(&self) -> bool {
        self.0.limit_at_zero_is_neg_inf()
    }

    /// `(lo, hi, n)` of the default sampling window.
    fn default_window(&self) -> PyResult<(f64, f64, usize)> {
        let w = self.0.default_window().map_err(err)?;
        Ok((w.lo, w.hi, w.n))
    }

    fn eval(&self, r: f64) -> PyResult<f64> {
        self.0.eval(r).map_err(err)
    }

    fn inverse(&self, z: f64) -> PyResult<f64> {
        self.0.inverse(z).map_err(err)
    }

    fn log_fprime_derivative(&self, z: f64) -> PyResult<f64> {
        self.0.log_fprime_derivative(z).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Family('{}')", self.0.label())
    }
}

/// Values on a uniform 1D or 2D grid.
#[pyclass(name = "Grid", frozen)]
struct PyGrid(GridFunction);

#[pymethods]
impl PyGrid {
    /// `values` is a flat list (1D) or a list of rows (2D); `origin` and
    /// `spacing` have one entry per axis.
    #[new]
    #[pyo3(signature = (values, origin, spacing, zero_outside = true))]
    fn new(values: &Bound<'_, PyAny>, origin: Vec<f64>, spacing: Vec<f64>, zero_outside: bool) -> PyResult<Self> {
        let (shape, flat) = if let Ok(v) = values.extract::<Vec<f64>>() {
            (vec![v.len()], v)
        } else {
            let rows: Vec<Vec<f64>> = values.extract()?;
            let ny = rows.first().map(Vec::len).unwrap_or(0);
            if rows.iter().any(|r| r.len() != ny) {
                return Err(PyValueError::new_err("rows must have equal length"));
            }
            (vec![rows.len(), ny], rows.concat())
        };
        GridFunction::new(origin, spacing, shape, flat, zero_outside).map(PyGrid).map_err(err)
    }

    /// `n` samples of `f` on `[lo, hi]`.
    #[staticmethod]
    #[pyo3(signature = (lo, hi, n, f, zero_outside = true))]
    fn from_function(lo: f64, hi: f64, n: usize, f: &Bound<'_, PyAny>, zero_outside: bool) -> PyResult<Self> {
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        let values = (0..n)
            .map(|i| f.call1((lo + i as f64 * h,))?.extract::<f64>())
            .collect::<PyResult<Vec<_>>>()?;
        GridFunction::new(vec![lo], vec![h], vec![n], values, zero_outside).map(PyGrid).map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        GridFunction::from_text(text).map(PyGrid).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    /// Flat list (1D) or list of rows (2D).
    fn values<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let g = &self.0;
        if g.dims() == 1 {
            return PyList::new(py, g.values());
        }
        PyList::new(py, g.values().chunks(g.shape()[1]).map(|r| r.to_vec()))
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    /// Node coordinates along `axis`.
    fn axis(&self, axis: usize) -> PyResult<Vec<f64>> {
        if axis >= self.0.dims() {
            return Err(PyValueError::new_err(format!("axis {axis} out of range")));
        }
        Ok(self.0.axis(axis))
    }
}

#[pyfunction]
fn alpha_mean(x: f64, y: f64, lam: f64, alpha: f64) -> PyResult<f64> {
    concaflow::alpha_mean(x, y, lam, alpha).map_err(err)
}

#[pyfunction]
#[pyo3(name = "hot_h")]
fn py_hot_h(z: f64) -> f64 {
    hot_h(z)
}

#[pyfunction]
#[pyo3(name = "hot_inverse")]
fn py_hot_inverse(y: f64) -> PyResult<f64> {
    hot_inverse(y).map_err(err)
}

#[pyfunction]
#[pyo3(name = "dhf_criterion", signature = (family, tol = DEFAULT_TOL))]
fn py_dhf_criterion<'py>(py: Python<'py>, family: &PyFamily, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &dhf_criterion(&family.0, None, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(name = "semilinear_criterion", signature = (family, kappa, p, tol = DEFAULT_TOL))]
fn py_semilinear_criterion<'py>(
    py: Python<'py>,
    family: &PyFamily,
    kappa: f64,
    p: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &semilinear_criterion(&family.0, kappa, p, None, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(name = "pm_initial_rate", signature = (m, alpha, tol = DEFAULT_TOL))]
fn py_pm_initial_rate<'py>(py: Python<'py>, m: f64, alpha: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &pm_initial_rate(m, alpha, None, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(name = "plaplace_initial_rate", signature = (p, alpha, tol = DEFAULT_TOL))]
fn py_plaplace_initial_rate<'py>(py: Python<'py>, p: f64, alpha: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &plaplace_initial_rate(p, alpha, None, tol).map_err(err)?)
}

/// Whether `f1` is weaker than `f2`.
#[pyfunction]
#[pyo3(name = "is_weaker", signature = (f1, f2, tol = DEFAULT_TOL))]
fn py_is_weaker<'py>(py: Python<'py>, f1: &PyFamily, f2: &PyFamily, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &is_weaker(&f1.0, &f2.0, None, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(name = "order_chain", signature = (families, tol = DEFAULT_TOL))]
fn py_order_chain<'py>(py: Python<'py>, families: Vec<PyRef<'py, PyFamily>>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let fams: Vec<AdmissibleFunction> = families.iter().map(|f| f.0.clone()).collect();
    to_py(py, &order_chain(&fams, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(name = "ha_epsilon")]
fn py_ha_epsilon(a: f64) -> PyResult<f64> {
    ha_epsilon(a).map_err(err)
}

/// `(ε_a, h_a(log f))` for a positive grid function `f`.
#[pyfunction]
#[pyo3(name = "ha_approximant")]
fn py_ha_approximant(a: f64, f: &PyGrid) -> PyResult<(f64, PyGrid)> {
    let (eps, g) = ha_approximant(a, &f.0).map_err(err)?;
    Ok((eps, PyGrid(g)))
}

#[pyfunction]
#[pyo3(name = "heat_line")]
fn py_heat_line(phi: &PyGrid, t: f64) -> PyResult<PyGrid> {
    heat_line(&phi.0, t).map(|s| PyGrid(s.u)).map_err(err)
}

/// Snapshots of the Dirichlet heat flow (or the semilinear flow when
/// `kappa` is given) at each listed time.
#[pyfunction]
#[pyo3(name = "dirichlet_flow", signature = (phi, times, dt = None, kappa = None, p = 2.0))]
fn py_dirichlet_flow(phi: &PyGrid, times: Vec<f64>, dt: Option<f64>, kappa: Option<f64>, p: f64) -> PyResult<Vec<PyGrid>> {
    let snaps = match kappa {
        Some(k) => semilinear_imex_at(&phi.0, k, p, &times, dt),
        None => dirichlet_cn(&phi.0, &times, dt),
    }
    .map_err(err)?;
    Ok(snaps.into_iter().map(|s| PyGrid(s.u)).collect())
}

/// Concavity check of a grid: `kind` is `"F"` (needs `family`), `"log"` or
/// `"quasi"`.
#[pyfunction]
#[pyo3(name = "check_concavity", signature = (u, kind, family = None, tol = DEFAULT_TOL))]
fn py_check_concavity<'py>(
    py: Python<'py>,
    u: &PyGrid,
    kind: &str,
    family: Option<&PyFamily>,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = match (kind, family) {
        ("F", Some(f)) => check_f_concavity(&u.0, &f.0, tol),
        ("F", None) => return Err(PyValueError::new_err("kind 'F' needs a family")),
        ("log", _) => check_log_concavity(&u.0, tol),
        ("quasi", _) => check_quasi_concavity(&u.0, tol),
        _ => return Err(PyValueError::new_err(format!("unknown kind {kind:?}"))),
    }
    .map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(name = "f_concave_envelope")]
fn py_f_concave_envelope(u: &PyGrid, family: &PyFamily) -> PyResult<PyGrid> {
    f_concave_envelope(&u.0, &family.0).map(PyGrid).map_err(err)
}

/// Runs a TOML experiment spec and returns the report as a dict; artifacts
/// and `report.json` are written to `out` when given.
#[pyfunction]
#[pyo3(signature = (spec, out = None))]
fn run_experiment<'py>(py: Python<'py>, spec: &str, out: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let spec = ExperimentSpec::from_toml(spec).map_err(err)?;
    let out = out.map(Path::new);
    let report = run(&spec, out).map_err(err)?;
    if let Some(dir) = out {
        report.write(dir).map_err(err)?;
    }
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "concaflow")]
fn concaflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(alpha_mean, m)?)?;
    m.add_function(wrap_pyfunction!(py_hot_h, m)?)?;
    m.add_function(wrap_pyfunction!(py_hot_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(py_dhf_criterion, m)?)?;
    m.add_function(wrap_pyfunction!(py_semilinear_criterion, m)?)?;
    m.add_function(wrap_pyfunction!(py_pm_initial_rate, m)?)?;
    m.add_function(wrap_pyfunction!(py_plaplace_initial_rate, m)?)?;
    m.add_function(wrap_pyfunction!(py_is_weaker, m)?)?;
    m.add_function(wrap_pyfunction!(py_order_chain, m)?)?;
    m.add_function(wrap_pyfunction!(py_ha_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(py_ha_approximant, m)?)?;
    m.add_function(wrap_pyfunction!(py_heat_line, m)?)?;
    m.add_function(wrap_pyfunction!(py_dirichlet_flow, m)?)?;
    m.add_function(wrap_pyfunction!(py_check_concavity, m)?)?;
    m.add_function(wrap_pyfunction!(py_f_concave_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    Ok(())
}
