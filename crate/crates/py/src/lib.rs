//! Python bindings. Maps and curves cross the boundary as their JSON documents.

use laplacian_growth::conformal::{harmonic_moments, LaurentMap};
use laplacian_growth::curve::{physical_contour, solve_double_point, TraceOptions};
use laplacian_growth::dynamics::{evolve, validate_pump, EvolutionState, PumpSpec};
use laplacian_growth::hodograph::{solve_hodograph, HodographParams};
use laplacian_growth::{verify, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Map JSON for `f(w) = r·w + a0 + Σ u_k w^{-k}`.
#[pyfunction]
#[pyo3(signature = (r, a0 = Complex64::new(0.0, 0.0), u = Vec::new()))]
fn laurent_map(r: f64, a0: Complex64, u: Vec<Complex64>) -> PyResult<String> {
    LaurentMap::new(r, a0, u).and_then(|m| m.to_json()).map_err(to_py)
}

/// Runs `(label, location or None for infinity, dT)` entries in order and returns the final map JSON.
#[pyfunction]
#[pyo3(signature = (map_json, schedule, step = 1e-2, truncation = 32))]
fn simulate(map_json: &str, schedule: Vec<(String, Option<Complex64>, f64)>, step: f64, truncation: usize) -> PyResult<String> {
    let run = || -> laplacian_growth::Result<String> {
        let map = LaurentMap::from_json(map_json)?.with_order(truncation);
        let pumps = schedule
            .iter()
            .map(|(label, at, dt)| {
                let pump = match at {
                    Some(z) => PumpSpec::at(label.clone(), *z)?,
                    None => PumpSpec::infinity(label.clone()),
                };
                validate_pump(&map, &pump, (4 * truncation).next_power_of_two().max(256))?;
                Ok((pump, *dt))
            })
            .collect::<laplacian_growth::Result<Vec<_>>>()?;
        let mut state = EvolutionState::new(map);
        for (pump, dt) in &pumps {
            state = evolve(&state, pump, *dt, step)?;
        }
        state.map.to_json()
    };
    run().map_err(to_py)
}

/// `n` boundary points of a map.
#[pyfunction]
fn boundary(map_json: &str, n: usize) -> PyResult<Vec<Complex64>> {
    let m = LaurentMap::from_json(map_json).map_err(to_py)?;
    Ok(m.boundary_contour(n).map_err(to_py)?.samples().to_vec())
}

/// `(t0, [t1, ..., t_count])`.
#[pyfunction]
fn moments(map_json: &str, count: usize) -> PyResult<(f64, Vec<Complex64>)> {
    let m = LaurentMap::from_json(map_json).map_err(to_py)?;
    let v = harmonic_moments(&m, count).map_err(to_py)?;
    Ok((v.t0, v.tk))
}

/// Branch points `(E1, E2)` of the N=1 family at `(p, q, mu, T)`.
#[pyfunction]
#[pyo3(name = "solve_hodograph")]
fn hodograph(p: f64, q: f64, mu: f64, t: f64) -> PyResult<(f64, f64)> {
    let params = HodographParams::new(p, q, mu, t).map_err(to_py)?;
    let bp = solve_hodograph(&params, None).map_err(to_py)?;
    Ok((bp.e1, bp.e2))
}

/// Curve JSON and traced boundary of the N=1 instance at `(p, q, mu, T)`.
#[pyfunction]
#[pyo3(signature = (p, q, mu, t, samples = 1024))]
fn trace(p: f64, q: f64, mu: f64, t: f64, samples: usize) -> PyResult<(String, Vec<Complex64>)> {
    let run = || -> laplacian_growth::Result<(String, Vec<Complex64>)> {
        let params = HodographParams::new(p, q, mu, t)?;
        let curve = solve_double_point(&params.curve()?)?;
        let opts = TraceOptions { samples, ..TraceOptions::with_scale(curve.scale()) };
        let contour = physical_contour(&curve, &opts)?;
        Ok((curve.to_json()?, contour.samples().to_vec()))
    };
    run().map_err(to_py)
}

/// JSON report of a verification suite.
#[pyfunction]
fn run_verify(selector: &str) -> PyResult<String> {
    let report = verify::run_selector(selector).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn laplacian_growth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(laurent_map, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(boundary, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(hodograph, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add("SELECTORS", verify::selector_names())?;
    Ok(())
}
