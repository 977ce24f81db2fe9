//! Python bindings for the `sepkit` toolkit.
//!
//! States are wrapped in a `DensityMatrix` class; every analysis returns a
//! plain dict with the same fields as the CLI's JSON reports.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use sepkit_core::closure::closure_sweep as core_closure_sweep;
use sepkit_core::criteria::{run_all, run_criterion as core_run_criterion, Criterion, RunOptions};
use sepkit_core::geometry;
use sepkit_core::linalg::{self as la, BipartiteShape, ComplexMatrix};
use sepkit_core::symext::{self, ExtensionOptions};
use sepkit_core::{spec, states, tomography, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvariantViolation(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for sepkit_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Serializes through JSON so Python receives ordinary dicts and lists.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix_from(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(&rows).py()
}

fn criteria_from(token: &str) -> PyResult<Vec<Criterion>> {
    Criterion::parse_list(token).py()
}

fn run_options(k: usize, max_iters: Option<usize>) -> RunOptions {
    let mut opts = RunOptions { symext_k: k, ..RunOptions::default() };
    if let Some(n) = max_iters {
        opts.symext.max_iters = n;
    }
    opts
}

/// A bipartite density matrix on `dim_a x dim_b`.
#[pyclass(name = "DensityMatrix", module = "sepkit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensity {
    inner: la::DensityMatrix,
}

#[pymethods]
impl PyDensity {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>, dim_a: usize, dim_b: usize) -> PyResult<Self> {
        let shape = BipartiteShape::new(dim_a, dim_b).py()?;
        Ok(PyDensity { inner: la::DensityMatrix::new(matrix_from(rows)?, shape).py()? })
    }

    /// Builds a state from a specifier such as `maxent:2` or `sep:3:3:4:1`.
    #[staticmethod]
    fn from_spec(spec: &str) -> PyResult<Self> {
        Ok(PyDensity { inner: spec::parse_state_spec(spec).py()?.state })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let s = self.inner.shape();
        (s.dim_a, s.dim_b)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        rows_of(self.inner.matrix())
    }

    /// Eigenvalues in descending order.
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn partial_transpose(&self) -> Vec<Vec<Complex64>> {
        rows_of(&self.inner.partial_transpose())
    }

    fn realign(&self) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows_of(&la::realign(self.inner.matrix(), self.inner.shape()).py()?))
    }

    /// Reduced state on side `"A"` or `"B"`.
    fn reduced(&self, side: &str) -> PyResult<Vec<Vec<Complex64>>> {
        let keep = match side {
            "A" | "a" => la::Side::A,
            "B" | "b" => la::Side::B,
            other => return Err(PyValueError::new_err(format!("side must be 'A' or 'B', got '{other}'"))),
        };
        Ok(rows_of(&self.inner.reduced(keep)))
    }

    fn trace_distance(&self, other: &PyDensity) -> PyResult<f64> {
        la::trace_distance(&self.inner, &other.inner).py()
    }

    fn tensor_power(&self, n: usize) -> PyResult<PyDensity> {
        Ok(PyDensity { inner: states::tensor_power_bipartite(&self.inner, n).py()? })
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.shape();
        format!("DensityMatrix({a}x{b})")
    }
}

#[pyfunction]
fn max_entangled(d: usize) -> PyResult<PyDensity> {
    Ok(PyDensity { inner: states::max_entangled(d).py()? })
}

#[pyfunction]
fn isotropic(d: usize, t: f64) -> PyResult<PyDensity> {
    Ok(PyDensity { inner: states::isotropic(d, t).py()? })
}

#[pyfunction]
fn tiles() -> PyDensity {
    PyDensity { inner: states::tiles_upb_state() }
}

#[pyfunction]
fn random_separable(dim_a: usize, dim_b: usize, k: usize, seed: u64) -> PyResult<PyDensity> {
    let shape = BipartiteShape::new(dim_a, dim_b).py()?;
    Ok(PyDensity { inner: states::random_separable(shape, k, seed).py()?.0 })
}

#[pyfunction]
fn bipartite_product(rho: &PyDensity, sigma: &PyDensity) -> PyResult<PyDensity> {
    Ok(PyDensity { inner: sepkit_core::closure::bipartite_product(&rho.inner, &sigma.inner).py()? })
}

/// Verdicts for one criterion token (`entropic` yields both orders), or for
/// every criterion when `criterion` is omitted.
#[pyfunction]
#[pyo3(signature = (rho, criterion=None, k=2, max_iters=None))]
fn criteria<'py>(
    py: Python<'py>,
    rho: &PyDensity,
    criterion: Option<&str>,
    k: usize,
    max_iters: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = run_options(k, max_iters);
    let verdicts = match criterion {
        None => run_all(&rho.inner, &opts).py()?,
        Some(token) => criteria_from(token)?
            .into_iter()
            .map(|c| core_run_criterion(&rho.inner, c, &opts))
            .collect::<sepkit_core::Result<Vec<_>>>()
            .py()?,
    };
    to_py(py, &verdicts)
}

#[pyfunction]
#[pyo3(signature = (rho, k=2, max_iters=None))]
fn symmetric_extension<'py>(
    py: Python<'py>,
    rho: &PyDensity,
    k: usize,
    max_iters: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut opts = ExtensionOptions::default();
    if let Some(n) = max_iters {
        opts.max_iters = n;
    }
    let res = symext::has_symmetric_extension(&rho.inner, k, &opts).py()?;
    let check = match &res.witness_extension {
        Some(x) => Some(symext::verify_extension(&rho.inner, k, x).py()?),
        None => None,
    };
    to_py(
        py,
        &serde_json::json!({
            "k": k,
            "status": res.status,
            "residual": res.residual,
            "iterations": res.iterations,
            "certificate": res.certificate,
            "witness_check": check,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (target, source, n, eps=0.75, trials=400, seed=0))]
fn acceptance_probability<'py>(
    py: Python<'py>,
    target: &PyDensity,
    source: &PyDensity,
    n: u64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let est = tomography::acceptance_probability(&target.inner, &source.inner, n, eps, trials, seed).py()?;
    to_py(py, &est)
}

/// Linear-inversion estimate from exact outcome probabilities of a seeded
/// local IC-POVM; reproduces the state up to rounding.
#[pyfunction]
#[pyo3(signature = (rho, seed=0))]
fn reconstruct_exact(rho: &PyDensity, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let povm = tomography::local_povm(&rho.inner, seed).py()?;
    let probs = povm.probabilities(&rho.inner).py()?;
    Ok(rows_of(&povm.reconstruct_from_probabilities(&probs).py()?))
}

#[pyfunction]
fn definetti_bound(dim: usize, n: usize, k: usize) -> PyResult<f64> {
    geometry::definetti_bound(dim, n, k).py()
}

#[pyfunction]
fn witness_lower_bound(rho: &PyDensity, witness: Vec<Vec<Complex64>>, sep_max: f64) -> PyResult<f64> {
    geometry::witness_lower_bound(&rho.inner, &matrix_from(witness)?, sep_max).py()
}

#[pyfunction]
fn fidelity_bound_check<'py>(py: Python<'py>, sigma: &PyDensity) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &geometry::fidelity_bound_check(&sigma.inner).py()?)
}

#[pyfunction]
#[pyo3(signature = (rho, tol=geometry::DEFAULT_BISECTION_TOL))]
fn ppt_boundary<'py>(py: Python<'py>, rho: &PyDensity, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &geometry::ppt_boundary_bisect(&rho.inner, tol, None).py()?)
}

#[pyfunction]
#[pyo3(signature = (criterion, trials=200, seed=0, k=2))]
fn closure_sweep<'py>(py: Python<'py>, criterion: &str, trials: usize, seed: u64, k: usize) -> PyResult<Bound<'py, PyAny>> {
    let opts = run_options(k, None);
    let reports = criteria_from(criterion)?
        .into_iter()
        .map(|c| core_closure_sweep(c, trials, seed, &opts))
        .collect::<sepkit_core::Result<Vec<_>>>()
        .py()?;
    to_py(py, &reports)
}

/// Runs the command-line interface in-process and returns its exit code.
#[pyfunction]
fn cli(args: Vec<String>) -> i32 {
    sepkit_core::cli::run(std::iter::once("sepkit".to_string()).chain(args))
}

#[pymodule]
pub fn sepkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", sepkit_core::cli::VERSION)?;
    m.add_class::<PyDensity>()?;
    m.add_function(wrap_pyfunction!(max_entangled, m)?)?;
    m.add_function(wrap_pyfunction!(isotropic, m)?)?;
    m.add_function(wrap_pyfunction!(tiles, m)?)?;
    m.add_function(wrap_pyfunction!(random_separable, m)?)?;
    m.add_function(wrap_pyfunction!(bipartite_product, m)?)?;
    m.add_function(wrap_pyfunction!(criteria, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_extension, m)?)?;
    m.add_function(wrap_pyfunction!(acceptance_probability, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_exact, m)?)?;
    m.add_function(wrap_pyfunction!(definetti_bound, m)?)?;
    m.add_function(wrap_pyfunction!(witness_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(ppt_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(closure_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}
