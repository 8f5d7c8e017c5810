//! Python bindings; high-precision values cross the boundary as decimal strings.

use cuspforge::holonomy::{cusp_parameter as cusp_param, SignedMonomial};
use cuspforge::isolation::{isolation_verdict as iso_verdict, IsolationOptions};
use cuspforge::manifold::edge_equation;
use cuspforge::numberlab::{self, FieldClass};
use cuspforge::screen::{self as screening, ScreenOptions, ScreenReport};
use cuspforge::solver::{self, FillTarget, SolverOptions};
use cuspforge::tracecalc::{self, TraceTuple};
use cuspforge::{fixtures, mu, num, IdealTriangulation, ShapeAssignment};
use pyo3::create_exception;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyInt, PyList};
use rug::Complex;

create_exception!(cuspforge, ParseError, PyValueError);
create_exception!(cuspforge, SolveError, PyRuntimeError);

type Monomial = (Vec<i32>, Vec<i32>, i32);

fn monomial(m: &SignedMonomial) -> Monomial {
    (m.a.clone(), m.b.clone(), m.sign as i32)
}

fn pair(z: &Complex) -> (String, String) {
    num::decimal_pair(z)
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (v.to_string(),))?.unbind())
}

/// `str` in any form accepted by the CLI, or anything with `.real` / `.imag`.
fn complex_arg(v: &Bound<'_, PyAny>, prec: u32) -> PyResult<Complex> {
    if let Ok(s) = v.extract::<String>() {
        return num::parse_complex(&s, prec).ok_or_else(|| PyValueError::new_err(format!("cannot parse {s:?} as a complex number")));
    }
    let re: f64 = v.getattr("real")?.extract()?;
    let im: f64 = v.getattr("imag")?.extract()?;
    Ok(Complex::with_val(prec, (re, im)))
}

fn cusp_arg(tri: &IdealTriangulation, cusp: &Bound<'_, PyAny>) -> PyResult<usize> {
    let name = match cusp.extract::<usize>() {
        Ok(i) => i.to_string(),
        Err(_) => cusp.extract::<String>()?,
    };
    tri.cusp_index(&name).map_err(|e| PyIndexError::new_err(e.to_string()))
}

fn solver_options(precision_bits: u32, seed: u64, tolerance: Option<f64>) -> SolverOptions {
    SolverOptions { precision_bits, seed, tolerance, ..SolverOptions::default() }
}

#[pyclass(name = "Triangulation", module = "cuspforge", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTriangulation {
    inner: IdealTriangulation,
}

#[pymethods]
impl PyTriangulation {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        cuspforge::parse_triangulation(text).map(|inner| PyTriangulation { inner }).map_err(|e| ParseError::new_err(e.to_string()))
    }

    /// Bundled fixture name, a fixture in `$CUSPFORGE_FIXTURES`, or a file path.
    #[staticmethod]
    fn load(source: &str) -> PyResult<Self> {
        let (_, text) = fixtures::resolve(source).ok_or_else(|| ParseError::new_err(format!("cannot read {source}")))?;
        Self::from_json(&text)
    }

    #[staticmethod]
    fn fixture_names() -> Vec<&'static str> {
        fixtures::names()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n_tet(&self) -> usize {
        self.inner.n_tet
    }

    #[getter]
    fn cusp_names(&self) -> Vec<String> {
        self.inner.cusps.iter().map(|c| c.name.clone()).collect()
    }

    /// `(a, b, sign)` for `sign * prod z^a (1-z)^b`, one per edge.
    fn edge_equations(&self) -> Vec<Monomial> {
        (0..self.inner.edges.len()).map(|e| monomial(&edge_equation(&self.inner, e))).collect()
    }

    fn meridian_monomial(&self, cusp: &Bound<'_, PyAny>) -> PyResult<Monomial> {
        let c = cusp_arg(&self.inner, cusp)?;
        Ok(monomial(&mu(&self.inner, &self.inner.cusps[c].meridian)))
    }

    fn longitude_monomial(&self, cusp: &Bound<'_, PyAny>) -> PyResult<Monomial> {
        let c = cusp_arg(&self.inner, cusp)?;
        Ok(monomial(&mu(&self.inner, &self.inner.cusps[c].longitude)))
    }

    fn __repr__(&self) -> String {
        format!("Triangulation({:?}, n_tet={}, cusps={:?})", self.inner.name, self.inner.n_tet, self.cusp_names())
    }
}

#[pyclass(name = "Shapes", module = "cuspforge", frozen, from_py_object)]
#[derive(Clone)]
struct PyShapes {
    inner: ShapeAssignment,
}

#[pymethods]
impl PyShapes {
    #[new]
    #[pyo3(signature = (values, precision_bits = 256))]
    fn new(values: Vec<Bound<'_, PyAny>>, precision_bits: u32) -> PyResult<Self> {
        let z = values.iter().map(|v| complex_arg(v, precision_bits)).collect::<PyResult<Vec<_>>>()?;
        Ok(PyShapes { inner: ShapeAssignment::new(z, precision_bits) })
    }

    #[getter]
    fn precision_bits(&self) -> u32 {
        self.inner.precision_bits
    }

    /// Rounded to Python complex numbers.
    #[getter]
    fn values(&self) -> Vec<(f64, f64)> {
        self.inner.z.iter().map(|z| (z.real().to_f64(), z.imag().to_f64())).collect()
    }

    fn decimal(&self) -> Vec<(String, String)> {
        self.inner.z.iter().map(pair).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let v: Vec<String> = self.inner.z.iter().map(|z| num::fmt_complex(z, 12)).collect();
        format!("Shapes([{}], precision_bits={})", v.join(", "), self.inner.precision_bits)
    }
}

#[pyclass(name = "SolveResult", module = "cuspforge", frozen)]
struct PySolveResult {
    inner: solver::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn shapes(&self) -> PyShapes {
        PyShapes { inner: self.inner.shapes.clone() }
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual.to_f64()
    }

    #[getter]
    fn geometric(&self) -> bool {
        self.inner.geometric
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn attempt(&self) -> usize {
        self.inner.attempt
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("SolveResult(residual={:e}, geometric={})", self.residual(), self.inner.geometric)
    }
}

fn shapes_arg(v: &Bound<'_, PyAny>) -> PyResult<ShapeAssignment> {
    if let Ok(r) = v.cast::<PySolveResult>() {
        return Ok(r.get().inner.shapes.clone());
    }
    Ok(v.extract::<PyShapes>()?.inner)
}

#[pyfunction]
#[pyo3(signature = (tri, precision_bits = 256, seed = 0, tolerance = None))]
fn solve_complete(tri: &PyTriangulation, precision_bits: u32, seed: u64, tolerance: Option<f64>) -> PyResult<PySolveResult> {
    solver::solve_complete(&tri.inner, &solver_options(precision_bits, seed, tolerance))
        .map(|inner| PySolveResult { inner })
        .map_err(|e| SolveError::new_err(e.to_string()))
}

/// `fillings[c]` is `None` for a complete cusp or `(p, q)`.
#[pyfunction]
#[pyo3(signature = (tri, fillings, precision_bits = 256, seed = 0, tolerance = None))]
fn solve_filled(
    tri: &PyTriangulation,
    fillings: Vec<Option<(i64, i64)>>,
    precision_bits: u32,
    seed: u64,
    tolerance: Option<f64>,
) -> PyResult<PySolveResult> {
    let targets: Vec<FillTarget> =
        fillings.iter().map(|f| f.map_or(FillTarget::Complete, |(p, q)| FillTarget::Filled(p, q))).collect();
    solver::solve_filled(&tri.inner, &targets, &solver_options(precision_bits, seed, tolerance))
        .map(|inner| PySolveResult { inner })
        .map_err(|e| SolveError::new_err(e.to_string()))
}

/// `tau(l) / tau(m)` at the given shapes, as decimal strings.
#[pyfunction]
fn cusp_parameter(tri: &PyTriangulation, shapes: &Bound<'_, PyAny>, cusp: &Bound<'_, PyAny>) -> PyResult<(String, String)> {
    let c = cusp_arg(&tri.inner, cusp)?;
    let z = shapes_arg(shapes)?;
    let v = cusp_param(&tri.inner, &tri.inner.cusps[c]).evaluate(&z).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(pair(&v))
}

fn py_ints<'py>(py: Python<'py>, c: &[rug::Integer]) -> PyResult<Bound<'py, PyList>> {
    let int = py.get_type::<PyInt>();
    PyList::new(py, c.iter().map(|v| int.call1((v.to_string(),))).collect::<PyResult<Vec<_>>>()?)
}

/// Minimal polynomial as integers, constant term first.
#[pyfunction]
#[pyo3(signature = (value, precision_bits = 256, max_degree = 12))]
fn algdep<'py>(py: Python<'py>, value: &Bound<'py, PyAny>, precision_bits: u32, max_degree: usize) -> PyResult<Bound<'py, PyList>> {
    let x = complex_arg(value, precision_bits)?;
    let mp = numberlab::algdep(&x, max_degree).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py_ints(py, &mp.coefficients)
}

fn field_dict<'py>(py: Python<'py>, mp: Option<&numberlab::MinPoly>, fc: &FieldClass) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match mp {
        Some(m) => d.set_item("minpoly", py_ints(py, &m.coefficients)?)?,
        None => d.set_item("minpoly", py.None())?,
    }
    d.set_item("field", fc.tag())?;
    d.set_item("rigid_compatible", numberlab::rigid_compatible(fc))?;
    d.set_item("flagged", fc.flagged())?;
    Ok(d)
}

/// `{"minpoly", "field", "rigid_compatible", "flagged"}`.
#[pyfunction]
#[pyo3(signature = (value, precision_bits = 256, max_degree = 12))]
fn recognize<'py>(py: Python<'py>, value: &Bound<'py, PyAny>, precision_bits: u32, max_degree: usize) -> PyResult<Bound<'py, PyDict>> {
    let x = complex_arg(value, precision_bits)?;
    let (mp, fc) = numberlab::recognize(&x, max_degree);
    field_dict(py, mp.as_ref(), &fc)
}

/// Field class of an integer polynomial, constant term first.
#[pyfunction]
fn classify(py: Python<'_>, coefficients: Vec<i64>) -> PyResult<Bound<'_, PyDict>> {
    let mp = numberlab::MinPoly::from_coefficients(&coefficients);
    if mp.degree() == 0 {
        return Err(PyValueError::new_err("constant polynomial"));
    }
    field_dict(py, Some(&mp), &numberlab::classify_field(&mp))
}

/// Isolation evidence as a dict of decimal strings.
#[pyfunction]
#[pyo3(signature = (tri, shapes, cusp, tolerance = None))]
fn isolation_verdict(
    py: Python<'_>,
    tri: &PyTriangulation,
    shapes: &Bound<'_, PyAny>,
    cusp: &Bound<'_, PyAny>,
    tolerance: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let c = cusp_arg(&tri.inner, cusp)?;
    let z = shapes_arg(shapes)?;
    let opts = IsolationOptions { tolerance, ..IsolationOptions::default() };
    let ev = iso_verdict(&tri.inner, c, &z, &opts).map_err(|e| SolveError::new_err(e.to_string()))?;
    to_py(py, &ev.to_json())
}

/// `C = (2 I_lm' - I_l I_m') / (2 I_mm' - I_m I_m')`.
#[pyfunction]
#[pyo3(signature = (i_mu, i_mu_prime, i_lambda, i_lambda_mu_prime, i_mu_mu_prime, precision_bits = 256))]
fn cusp_parameter_from_traces(
    i_mu: &Bound<'_, PyAny>,
    i_mu_prime: &Bound<'_, PyAny>,
    i_lambda: &Bound<'_, PyAny>,
    i_lambda_mu_prime: &Bound<'_, PyAny>,
    i_mu_mu_prime: &Bound<'_, PyAny>,
    precision_bits: u32,
) -> PyResult<(String, String)> {
    let p = precision_bits;
    let t = TraceTuple {
        i_mu: complex_arg(i_mu, p)?,
        i_mu_prime: complex_arg(i_mu_prime, p)?,
        i_lambda: complex_arg(i_lambda, p)?,
        i_lambda_mu_prime: complex_arg(i_lambda_mu_prime, p)?,
        i_mu_mu_prime: complex_arg(i_mu_mu_prime, p)?,
    };
    tracecalc::cusp_parameter_from_traces(&t).map(|c| pair(&c)).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn screen_options(precision_bits: u32, max_degree: usize, seed: u64, parallelism: usize, tolerance: Option<f64>) -> ScreenOptions {
    ScreenOptions {
        solver: solver_options(precision_bits, seed, None),
        max_degree,
        isolation: IsolationOptions { tolerance, ..IsolationOptions::default() },
        parallelism,
    }
}

fn reports(py: Python<'_>, rs: &[ScreenReport]) -> PyResult<Vec<Py<PyAny>>> {
    rs.iter().map(|r| to_py(py, &r.to_json())).collect()
}

/// Screen files or fixture names; one report dict per input.
#[pyfunction]
#[pyo3(signature = (inputs, precision_bits = 256, max_degree = 12, seed = 0, parallelism = 0, tolerance = None, out = None))]
#[allow(clippy::too_many_arguments)]
fn screen(
    py: Python<'_>,
    inputs: Vec<String>,
    precision_bits: u32,
    max_degree: usize,
    seed: u64,
    parallelism: usize,
    tolerance: Option<f64>,
    out: Option<std::path::PathBuf>,
) -> PyResult<Vec<Py<PyAny>>> {
    let opts = screen_options(precision_bits, max_degree, seed, parallelism, tolerance);
    let rs = py.detach(|| screening::screen(&inputs, &opts));
    if let Some(dir) = out {
        screening::write_reports(&rs, &dir).map_err(PyRuntimeError::new_err)?;
    }
    reports(py, &rs)
}

/// Fill `cusp` along each slope and screen the remaining cusps.
#[pyfunction]
#[pyo3(signature = (tri, cusp, slopes, precision_bits = 256, max_degree = 12, seed = 0, parallelism = 0))]
#[allow(clippy::too_many_arguments)]
fn fill_and_screen(
    py: Python<'_>,
    tri: &PyTriangulation,
    cusp: &Bound<'_, PyAny>,
    slopes: Vec<(i64, i64)>,
    precision_bits: u32,
    max_degree: usize,
    seed: u64,
    parallelism: usize,
) -> PyResult<Vec<Py<PyAny>>> {
    let c = cusp_arg(&tri.inner, cusp)?;
    let opts = screen_options(precision_bits, max_degree, seed, parallelism, None);
    let name = tri.inner.name.clone();
    let rs = py.detach(|| screening::fill_and_screen(&name, &tri.inner, c, &slopes, &opts));
    reports(py, &rs)
}

#[pymodule]
#[pyo3(name = "cuspforge")]
fn cuspforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", screening::TOOL_VERSION)?;
    m.add("PROVENANCE_TAG", screening::PROVENANCE_TAG)?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add("SolveError", m.py().get_type::<SolveError>())?;
    m.add_class::<PyTriangulation>()?;
    m.add_class::<PyShapes>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve_complete, m)?)?;
    m.add_function(wrap_pyfunction!(solve_filled, m)?)?;
    m.add_function(wrap_pyfunction!(cusp_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(algdep, m)?)?;
    m.add_function(wrap_pyfunction!(recognize, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(isolation_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(cusp_parameter_from_traces, m)?)?;
    m.add_function(wrap_pyfunction!(screen, m)?)?;
    m.add_function(wrap_pyfunction!(fill_and_screen, m)?)?;
    Ok(())
}
