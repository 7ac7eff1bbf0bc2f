//! Python bindings for the noonsim simulator.

// false positive from the pyo3 0.22 function macros
#![allow(clippy::useless_conversion)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use noonsim::circuits::{self, Circuit};
use noonsim::experiment::{self, DelayUnit, ScanResult};
use noonsim::fit;
use noonsim::report;
use noonsim::source::Scenario;
use noonsim::temporal::{self, GaussianPacket};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: noonsim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Linear-optics network with labelled single-mode detectors.
#[pyclass(name = "Circuit", module = "noonsim_py")]
#[derive(Clone)]
struct PyCircuit {
    inner: Circuit,
}

#[pymethods]
impl PyCircuit {
    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn n_paths(&self) -> usize {
        self.inner.n_paths()
    }

    #[getter]
    fn labels(&self) -> String {
        self.inner.labels()
    }

    /// Largest deviation of the compiled transfer matrix from unitarity.
    fn unitarity_residual(&self) -> PyResult<f64> {
        Ok(self.inner.compile().map_err(err)?.unitarity_residual())
    }

    /// Transfer matrix as rows of complex numbers, indexed `[out][in]` with
    /// mode index `2·path + pol`.
    fn matrix(&self) -> PyResult<Vec<Vec<(f64, f64)>>> {
        let m = self.inner.compile().map_err(err)?;
        let m = m.matrix();
        Ok((0..m.nrows()).map(|r| (0..m.ncols()).map(|c| (m[(r, c)].re, m[(r, c)].im)).collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Circuit('{}', paths={}, detectors='{}')", self.inner.name(), self.inner.n_paths(), self.inner.labels())
    }
}

/// One of `hom`, `noon4`, `noon6`.
#[pyfunction]
fn preset(name: &str) -> PyResult<PyCircuit> {
    Ok(PyCircuit { inner: circuits::preset(name).map_err(err)? })
}

#[pyfunction]
fn packet_overlap(t1: f64, t2: f64, sigma: f64) -> PyResult<f64> {
    let a = GaussianPacket::new(t1, sigma).map_err(err)?;
    let b = GaussianPacket::new(t2, sigma).map_err(err)?;
    temporal::packet_overlap(&a, &b).map_err(err)
}

#[pyfunction]
fn exchange_ratio(t1: f64, t2: f64, sigma: f64) -> PyResult<f64> {
    let a = GaussianPacket::new(t1, sigma).map_err(err)?;
    let b = GaussianPacket::new(t2, sigma).map_err(err)?;
    temporal::exchange_ratio(&a, &b).map_err(err)
}

/// Per-pulse coincidence probability of `pattern` at each H/V delay (fs)
/// for pairs created at `pair_times`.
#[pyfunction]
#[pyo3(signature = (circuit, pattern, delays, pair_times, sigma=140.0, eta=0.1))]
fn delay_scan(
    circuit: &PyCircuit,
    pattern: &str,
    delays: Vec<f64>,
    pair_times: Vec<f64>,
    sigma: f64,
    eta: f64,
) -> PyResult<Vec<f64>> {
    let sc = Scenario::custom(pair_times, sigma, eta).map_err(err)?;
    Ok(experiment::delay_scan(&sc, &circuit.inner, pattern, &delays).map_err(err)?.rates)
}

fn scan(delays: Vec<f64>, rates: Vec<f64>) -> PyResult<ScanResult> {
    ScanResult::new("scan", delays, rates, DelayUnit::Fs).map_err(err)
}

/// Four-fold rates rebuilt from a dict of two-fold rate lists on a shared
/// delay grid.
#[pyfunction]
#[pyo3(signature = (delays, two_fold, quad, r0=1.0))]
fn combine_four_from_pairs(delays: Vec<f64>, two_fold: BTreeMap<String, Vec<f64>>, quad: &str, r0: f64) -> PyResult<Vec<f64>> {
    let scans = two_fold
        .into_iter()
        .map(|(k, r)| Ok((k.clone(), ScanResult::new(k, delays.clone(), r, DelayUnit::Fs).map_err(err)?)))
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    Ok(experiment::combine_four_from_pairs(&scans, quad, r0).map_err(err)?.rates)
}

#[pyfunction]
fn v4_from_ea(v2: f64, ea: f64) -> f64 {
    experiment::v4_from_ea(v2, ea)
}

/// Returns `(value, raw)`: the clamped and unclamped exchange ratio.
#[pyfunction]
fn ea_from_v4(v4: f64, v2: f64) -> PyResult<(f64, f64)> {
    let e = experiment::ea_from_v4(v4, v2).map_err(err)?;
    Ok((e.value, e.raw))
}

#[pyfunction]
fn visibility_model_free(delays: Vec<f64>, rates: Vec<f64>) -> PyResult<f64> {
    fit::visibility_model_free(&scan(delays, rates)?).map_err(err)
}

/// Gaussian dip fit; returns a dict with baseline, visibility, width,
/// center, rms, converged and degenerate.
#[pyfunction]
fn fit_gaussian_dip(py: Python<'_>, delays: Vec<f64>, rates: Vec<f64>) -> PyResult<PyObject> {
    let f = fit::fit_gaussian_dip(&scan(delays, rates)?, None).map_err(err)?;
    let d = pyo3::types::PyDict::new_bound(py);
    d.set_item("baseline", f.baseline)?;
    d.set_item("visibility", f.visibility)?;
    d.set_item("width", f.width)?;
    d.set_item("center", f.center)?;
    d.set_item("rms", f.rms)?;
    d.set_item("converged", f.converged)?;
    d.set_item("degenerate", f.degenerate)?;
    Ok(d.into())
}

/// `[(photons, visibility, [patterns])]` grouped by ideal visibility.
#[pyfunction]
#[pyo3(signature = (circuit, sigma=140.0))]
fn list_patterns(circuit: &PyCircuit, sigma: f64) -> PyResult<Vec<(usize, f64, Vec<String>)>> {
    Ok(report::list_patterns(&circuit.inner, sigma)
        .map_err(err)?
        .into_iter()
        .map(|c| (c.photons, c.visibility, c.patterns))
        .collect())
}

/// Runs a configuration file and returns the report rows as
/// `(scenario, pattern, method, visibility)`.
#[pyfunction]
fn run_config(path: PathBuf, out_dir: PathBuf) -> PyResult<Vec<(String, String, String, f64)>> {
    let text = std::fs::read_to_string(&path).map_err(|e| PyRuntimeError::new_err(format!("{}: {e}", path.display())))?;
    let cfg = noonsim::config::parse_config(&text).map_err(err)?;
    let summary = report::run(&cfg, &out_dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(summary
        .rows
        .into_iter()
        .map(|r| (r.scenario, r.pattern, r.method.name().to_string(), r.visibility))
        .collect())
}

#[pymodule]
fn noonsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(packet_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(exchange_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(delay_scan, m)?)?;
    m.add_function(wrap_pyfunction!(combine_four_from_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(v4_from_ea, m)?)?;
    m.add_function(wrap_pyfunction!(ea_from_v4, m)?)?;
    m.add_function(wrap_pyfunction!(visibility_model_free, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gaussian_dip, m)?)?;
    m.add_function(wrap_pyfunction!(list_patterns, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
