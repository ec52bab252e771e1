//! Python bindings for the gaproute solvers.

use std::time::Duration;

use gaproute::generate::{oracle_instance, synthesize, toy_instance};
use gaproute::instance::{derive_beta as core_derive_beta, load_bin_types, reference_bin_types};
use gaproute::oracle::{brute_force, OracleLimits};
use gaproute::report::ReportStats;
use gaproute::{Fixed, MethodSpec, SolveOptions, SolveStatus};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A problem instance: GAPs, travel times, fleet and horizon.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    inner: gaproute::Instance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_toml(source: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: gaproute::Instance::from_toml_str(source).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: gaproute::Instance::load(path).map_err(err)?,
        })
    }

    /// Benchmark-shaped instance such as `"U/5/2/1"`.
    #[staticmethod]
    #[pyo3(signature = (shape, seed=0))]
    fn synthesize(shape: &str, seed: u64) -> PyResult<Self> {
        Ok(PyInstance {
            inner: synthesize(shape, seed).map_err(err)?,
        })
    }

    /// Random instance small enough for the exhaustive oracle.
    #[staticmethod]
    #[pyo3(signature = (seed, gaps=2))]
    fn small(seed: u64, gaps: usize) -> Self {
        PyInstance {
            inner: oracle_instance(seed, gaps),
        }
    }

    #[staticmethod]
    fn toy() -> Self {
        PyInstance { inner: toy_instance() }
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn gap_count(&self) -> usize {
        self.inner.gap_count()
    }

    #[getter]
    fn horizon_days(&self) -> usize {
        self.inner.horizon_days
    }

    #[getter]
    fn vehicle_count(&self) -> usize {
        self.inner.vehicle_count
    }

    #[getter]
    fn vehicle_capacity(&self) -> f64 {
        self.inner.vehicle_capacity
    }

    #[getter]
    fn time_limit(&self) -> f64 {
        self.inner.time_limit
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(name={:?}, gaps={}, days={}, vehicles={})",
            self.inner.name,
            self.inner.gap_count(),
            self.inner.horizon_days,
            self.inner.vehicle_count
        )
    }
}

/// Outcome of a solve: status, plan and search statistics.
#[pyclass(name = "SolveReport", frozen)]
struct PyReport {
    inner: gaproute::SolveReport,
}

#[pymethods]
impl PyReport {
    #[staticmethod]
    fn from_toml(source: &str) -> PyResult<Self> {
        Ok(PyReport {
            inner: gaproute::SolveReport::from_toml_str(source).map_err(err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn status(&self) -> String {
        self.inner.status.to_string()
    }

    #[getter]
    fn method(&self) -> &str {
        &self.inner.method
    }

    #[getter]
    fn objective(&self) -> Option<f64> {
        self.inner.objective()
    }

    #[getter]
    fn routing_cost(&self) -> Option<f64> {
        self.inner.solution.as_ref().map(|s| s.routing_cost)
    }

    #[getter]
    fn bin_cost(&self) -> Option<f64> {
        self.inner.solution.as_ref().map(|s| s.bin_cost)
    }

    #[getter]
    fn visits(&self) -> Option<Vec<usize>> {
        self.inner.solution.as_ref().map(|s| s.visits.clone())
    }

    #[getter]
    fn bins(&self) -> Option<Vec<usize>> {
        self.inner.solution.as_ref().map(|s| s.bins.clone())
    }

    /// `(vehicle, day, stops)` per tour.
    #[getter]
    fn routes(&self) -> Vec<(usize, usize, Vec<usize>)> {
        self.inner
            .solution
            .iter()
            .flat_map(|s| s.routes.iter().map(|r| (r.vehicle, r.day, r.stops.clone())))
            .collect()
    }

    #[getter]
    fn nodes(&self) -> u64 {
        self.inner.stats.nodes
    }

    #[getter]
    fn master_iterations(&self) -> u64 {
        self.inner.stats.master_iterations
    }

    #[getter]
    fn post_processing_iterations(&self) -> u64 {
        self.inner.stats.post_processing_iterations
    }

    #[getter]
    fn cuts(&self) -> std::collections::BTreeMap<String, u64> {
        self.inner.stats.cuts.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(method={:?}, status={}, objective={:?}, nodes={})",
            self.inner.method, self.inner.status, self.inner.objective(), self.inner.stats.nodes
        )
    }
}

/// Solves with `method`, e.g. `"mip+vis"` or `"benders+vis+lshaped"`.
#[pyfunction]
#[pyo3(signature = (instance, method="mip", time_limit=None, node_limit=None))]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    method: &str,
    time_limit: Option<f64>,
    node_limit: Option<u64>,
) -> PyResult<PyReport> {
    let spec: MethodSpec = method.parse().map_err(err)?;
    let mut opts = SolveOptions::default();
    if let Some(t) = time_limit {
        if !(t.is_finite() && t > 0.0) {
            return Err(err(format!("time limit must be positive, got {t}")));
        }
        opts.bb.time_limit = Duration::from_secs_f64(t);
    }
    if let Some(n) = node_limit {
        opts.bb.node_limit = n;
    }
    let inst = &instance.inner;
    let report = py.detach(|| gaproute::solve(inst, spec, &opts)).map_err(err)?;
    Ok(PyReport { inner: report })
}

/// Exhaustive optimum of a tiny instance.
#[pyfunction]
fn oracle(instance: &PyInstance) -> PyResult<PyReport> {
    let inst = &instance.inner;
    let combos = inst.combinations_per_gap().map_err(err)?;
    let best = brute_force(inst, &combos, OracleLimits::default()).map_err(err)?;
    Ok(PyReport {
        inner: gaproute::SolveReport {
            instance: inst.name.clone(),
            method: "oracle".into(),
            status: if best.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            solution: best,
            stats: ReportStats::default(),
            trace: Vec::new(),
        },
    })
}

/// Problems found in a report's plan; empty when it is valid.
#[pyfunction]
fn check(instance: &PyInstance, report: &PyReport) -> PyResult<Vec<String>> {
    let Some(sol) = &report.inner.solution else {
        return Ok(vec!["report has no solution".into()]);
    };
    let combos = instance.inner.combinations_per_gap().map_err(err)?;
    Ok(gaproute::check::check_solution(&instance.inner, &combos, sol))
}

/// Pareto-optimal bin combinations for the given space, as
/// `(id, type_sequence, daily_cost, capacity, area)`.
#[pyfunction]
#[pyo3(signature = (space, bin_types_toml=None))]
fn preprocess(space: f64, bin_types_toml: Option<&str>) -> PyResult<Vec<(usize, Vec<usize>, f64, f64, f64)>> {
    if !(space.is_finite() && space > 0.0) {
        return Err(err(format!("space must be positive, got {space}")));
    }
    let types = match bin_types_toml {
        Some(src) => load_bin_types(src).map_err(err)?,
        None => reference_bin_types(),
    };
    let front = gaproute::preproc::preprocess(&types, Fixed::from_f64(space)).map_err(err)?;
    Ok(front
        .iter()
        .map(|c| (c.id, c.type_sequence(), c.cost(), c.capacity(), c.joint_area.to_f64()))
        .collect())
}

#[pyfunction]
fn derive_beta(days: Vec<usize>, horizon: usize) -> PyResult<usize> {
    core_derive_beta(&days, horizon).map_err(err)
}

#[pymodule(name = "gaproute")]
fn gaproute_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(derive_beta, m)?)?;
    Ok(())
}
