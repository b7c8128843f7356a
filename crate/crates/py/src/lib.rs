use pencilforge::parse::{parse_jet, Scope};
use pencilforge::suite::{self, Command, RunOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

/// Runs a verification subcommand and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (command, case=None, eta12=None, eta22=None, f1=None, f2=None, f3=None, f4=None, seed=None))]
#[allow(clippy::too_many_arguments)]
fn run(
    command: &str,
    case: Option<String>,
    eta12: Option<String>,
    eta22: Option<String>,
    f1: Option<String>,
    f2: Option<String>,
    f3: Option<String>,
    f4: Option<String>,
    seed: Option<u64>,
) -> PyResult<String> {
    let cmd = Command::from_name(command).ok_or_else(|| PyValueError::new_err(format!("unknown command `{}`", command)))?;
    let opts = RunOptions { case, eta12, eta22, f: [f1, f2, f3, f4], seed, truncation: None };
    suite::run(cmd, &opts).map(|r| r.to_json()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Canonical form of a differential polynomial in `u1, u2`.
#[pyfunction]
fn canonical(text: &str) -> PyResult<String> {
    parse_jet(text, &Scope::default()).map(|p| p.to_string()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Negative controls as a JSON list of checks.
#[pyfunction]
fn negative_controls() -> String {
    serde_json::to_string(&suite::negative_controls()).expect("checks serialize")
}

#[pymodule]
fn pencilforge_py(_py: Python, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(canonical, m)?)?;
    m.add_function(wrap_pyfunction!(negative_controls, m)?)?;
    Ok(())
}
