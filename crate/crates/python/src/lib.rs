//! Python module `lsep_py`. Models, profiles and experiment configs cross
//! the boundary as JSON or TOML text.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use lsep::dependence::{estimate_delta_mc, DecayProfile};
use lsep::estimators;
use lsep::harness::{run_experiment as run, ExperimentConfig};
use lsep::kernel::Kernel;
use lsep::process_models::{simulate_path, simulate_stationary, ProcessModel};
use lsep::seminorm;
use lsep::LsepError;

create_exception!(lsep_py, LsepException, PyException);

fn err(e: LsepError) -> PyErr {
    match e {
        LsepError::InvalidArgument(_) | LsepError::Config(_) => PyValueError::new_err(e.to_string()),
        _ => LsepException::new_err(e.to_string()),
    }
}

fn model(json: &str) -> PyResult<ProcessModel> {
    let m: ProcessModel = serde_json::from_str(json).map_err(|e| PyValueError::new_err(format!("model: {e}")))?;
    m.validate().map_err(err)?;
    Ok(m)
}

fn profile(json: &str) -> PyResult<DecayProfile> {
    let p: DecayProfile = serde_json::from_str(json).map_err(|e| PyValueError::new_err(format!("profile: {e}")))?;
    p.validate().map_err(err)?;
    Ok(p)
}

/// X_1..X_n of one path. `model` is JSON.
#[pyfunction]
#[pyo3(signature = (model_json, n, seed, burn_in=None))]
fn simulate(py: Python<'_>, model_json: &str, n: usize, seed: u64, burn_in: Option<usize>) -> PyResult<Vec<f64>> {
    let m = model(model_json)?;
    py.detach(|| simulate_path(&m, n, seed, burn_in)).map(|p| p.values).map_err(err)
}

/// Stationary approximation frozen at u.
#[pyfunction]
#[pyo3(signature = (model_json, u, n, seed, burn_in=None))]
fn simulate_frozen(py: Python<'_>, model_json: &str, u: f64, n: usize, seed: u64, burn_in: Option<usize>) -> PyResult<Vec<f64>> {
    let m = model(model_json)?;
    py.detach(|| simulate_stationary(&m, u, n, seed, burn_in)).map(|p| p.values).map_err(err)
}

/// (estimate, mc standard error) of the dependence measure at lag k.
#[pyfunction]
#[pyo3(signature = (model_json, n, k, nu=2.0, reps=2000, seed=0))]
fn delta_hat(py: Python<'_>, model_json: &str, n: usize, k: usize, nu: f64, reps: usize, seed: u64) -> PyResult<(f64, f64)> {
    let m = model(model_json)?;
    let d = py.detach(|| estimate_delta_mc(&m, n, k, nu, reps, None, seed)).map_err(err)?;
    Ok((d.value, d.mc_se))
}

#[pyfunction]
fn beta(profile_json: &str, q: u64) -> PyResult<f64> {
    Ok(profile(profile_json)?.beta(q))
}

#[pyfunction]
fn q_star(profile_json: &str, x: f64) -> PyResult<u64> {
    if !(x > 0.0) {
        return Err(PyValueError::new_err("x must be positive"));
    }
    Ok(profile(profile_json)?.q_star(x))
}

#[pyfunction]
fn r_of_delta(profile_json: &str, delta: f64) -> PyResult<f64> {
    if !(delta > 0.0) {
        return Err(PyValueError::new_err("delta must be positive"));
    }
    Ok(profile(profile_json)?.r_of_delta(delta))
}

#[pyfunction]
fn v_norm(f2n: f64, d_n: f64, profile_json: &str) -> PyResult<f64> {
    if !(f2n >= 0.0 && d_n >= 0.0) {
        return Err(PyValueError::new_err("f2n and d_n must be non-negative"));
    }
    Ok(seminorm::v_norm(f2n, d_n, &profile(profile_json)?))
}

#[pyfunction]
fn truncate(x: f64, m: f64) -> PyResult<(f64, f64)> {
    if !(m > 0.0) {
        return Err(PyValueError::new_err("m must be positive"));
    }
    Ok(seminorm::truncate(x, m))
}

/// Local EDF at rescaled time v, Epanechnikov kernel.
#[pyfunction]
fn local_edf(x: Vec<f64>, h: f64, x_grid: Vec<f64>, v: f64) -> PyResult<Vec<f64>> {
    estimators::local_edf(&x, &Kernel::Epanechnikov, h, &x_grid, v).map(|r| r.values).map_err(err)
}

#[pyfunction]
fn local_mad(x: Vec<f64>, h: f64, v: f64) -> PyResult<f64> {
    estimators::local_mad(&x, &Kernel::Epanechnikov, h, v).map_err(err)
}

/// Runs an experiment config (TOML) and returns the report as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_toml: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config_toml).map_err(err)?;
    py.detach(|| run(&cfg).and_then(|r| r.to_json())).map_err(err)
}

#[pymodule]
fn lsep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LsepException", m.py().get_type::<LsepException>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_frozen, m)?)?;
    m.add_function(wrap_pyfunction!(delta_hat, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(q_star, m)?)?;
    m.add_function(wrap_pyfunction!(r_of_delta, m)?)?;
    m.add_function(wrap_pyfunction!(v_norm, m)?)?;
    m.add_function(wrap_pyfunction!(truncate, m)?)?;
    m.add_function(wrap_pyfunction!(local_edf, m)?)?;
    m.add_function(wrap_pyfunction!(local_mad, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
