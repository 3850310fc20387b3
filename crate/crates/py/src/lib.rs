//! Python bindings: `kpa.verify`, `kpa.bracket`, `kpa.derive`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use kpa_core::config::load_basis;
use kpa_core::expr::{EqualityMode, DEFAULT_TOL};
use kpa_core::suite::{cmd_bracket, cmd_derive, run_suite, BracketEngine, Format, SuiteConfig};
use kpa_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Tripwire { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_mode(mode: Option<&str>) -> PyResult<Option<EqualityMode>> {
    mode.map(|m| match m {
        "exact" => Ok(EqualityMode::Exact),
        "shell" => Ok(EqualityMode::ModuloShell),
        "numeric" => Ok(EqualityMode::Numeric),
        other => Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    })
    .transpose()
}

/// Runs the named suites (comma-separated or `all`) and returns the report
/// as a JSON string.
#[pyfunction]
#[pyo3(signature = (basis, suite = "all", mode = None, seed = 42, samples = 100, tol = DEFAULT_TOL, order = 2))]
fn verify(
    py: Python<'_>,
    basis: &str,
    suite: &str,
    mode: Option<&str>,
    seed: u64,
    samples: usize,
    tol: f64,
    order: usize,
) -> PyResult<String> {
    let cfg = SuiteConfig {
        basis: basis.to_string(),
        suites: suite.split(',').map(|s| s.trim().to_string()).collect(),
        mode: parse_mode(mode)?,
        seed,
        samples,
        tol,
        order,
        format: Format::Json,
        jobs: None,
    };
    let report = py.detach(|| run_suite(&cfg)).map_err(to_py)?;
    Ok(report.to_json())
}

/// `{a, b}` in the given basis; `engine` is `poisson` or `table`.
#[pyfunction]
#[pyo3(signature = (a, b, basis, engine = "poisson"))]
fn bracket(a: &str, b: &str, basis: &str, engine: &str) -> PyResult<String> {
    let engine = match engine {
        "poisson" => BracketEngine::Poisson,
        "table" => BracketEngine::Table,
        other => return Err(PyValueError::new_err(format!("unknown engine '{other}'"))),
    };
    let basis = load_basis(basis).map_err(to_py)?;
    Ok(cmd_bracket(&basis, a, b, engine).map_err(to_py)?.display)
}

/// Derivation text for `what` = `abd` or `table`.
#[pyfunction]
#[pyo3(signature = (basis, what = "abd"))]
fn derive(basis: &str, what: &str) -> PyResult<String> {
    let basis = load_basis(basis).map_err(to_py)?;
    cmd_derive(&basis, what).map_err(to_py)
}

#[pymodule]
fn kpa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add_function(wrap_pyfunction!(derive, m)?)?;
    Ok(())
}
