//! Python bindings: configuration parsing, runs with their diagnostics
//! ledger, manufactured-solution studies and admissibility certification.

use std::collections::HashMap;

use hydride_core::config::{emit_config, parse_config};
use hydride_core::diagnostics::{mms, positivity_report, LEDGER_COLUMNS};
use hydride_core::model::{certify_h, HFunction, DEFAULT_CERTIFY_SAMPLES};
use hydride_core::timestepper::{RunConfig, Scheme, State};
use hydride_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(hydride, HydrideError, PyException, "Base class of solver errors.");
create_exception!(hydride, ConfigError, HydrideError, "Invalid configuration or inadmissible data.");
create_exception!(hydride, InvariantViolation, HydrideError, "A discrete invariant was violated.");
create_exception!(hydride, SolverFailure, HydrideError, "A nonlinear or linear solve did not converge.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    if e.is_invariant_violation() {
        InvariantViolation::new_err(msg)
    } else if e.is_solver_failure() {
        SolverFailure::new_err(msg)
    } else {
        ConfigError::new_err(msg)
    }
}

/// A parsed and validated run configuration.
#[pyclass(name = "Config", frozen)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses configuration text; raises `ConfigError` on bad input.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_config(text).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Copy of this configuration with a different number of steps.
    fn with_steps(&self, n_steps: usize) -> PyResult<Self> {
        let inner = self.inner.with_steps(n_steps);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.grid.dim()
    }

    #[getter]
    fn cells(&self) -> Vec<usize> {
        self.inner.grid.cells_per_axis().to_vec()
    }

    #[getter]
    fn lambda_beta(&self) -> f64 {
        self.inner.lambda_beta
    }

    /// Canonical configuration text that parses back to this configuration.
    fn emit(&self) -> String {
        emit_config(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(dim={}, cells={:?}, T={}, N={})",
            self.inner.grid.dim(),
            self.inner.grid.cells_per_axis(),
            self.inner.t_final,
            self.inner.n_steps
        )
    }
}

/// One stored time level.
#[pyclass(name = "State", frozen)]
struct PyState {
    inner: State,
}

#[pymethods]
impl PyState {
    #[getter]
    fn step(&self) -> usize {
        self.inner.index
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    /// Cell values of `theta`, `chi`, `p`, `e`, `u` or `xi`.
    fn field(&self, name: &str) -> PyResult<Vec<f64>> {
        let f = match name {
            "theta" => &self.inner.theta,
            "chi" => &self.inner.chi,
            "p" => &self.inner.p,
            "e" => &self.inner.e,
            "u" => &self.inner.u,
            "xi" => &self.inner.xi,
            other => return Err(ConfigError::new_err(format!("unknown field `{other}`"))),
        };
        Ok(f.values().to_vec())
    }

    /// Snapshot text in the same format the CLI writes.
    fn snapshot(&self) -> String {
        self.inner.to_snapshot().to_text()
    }
}

/// A completed run: stored states and the diagnostics ledger.
#[pyclass(name = "RunResult", frozen)]
struct PyRunResult {
    states: Vec<State>,
    columns: HashMap<String, Vec<f64>>,
    ledger_csv: String,
    regularized_cells: usize,
    temperature_positive: bool,
}

#[pymethods]
impl PyRunResult {
    /// Names of the ledger columns, in CSV order.
    #[staticmethod]
    fn ledger_columns() -> Vec<&'static str> {
        LEDGER_COLUMNS.to_vec()
    }

    /// One ledger column, one value per step including the initial level.
    fn ledger(&self, column: &str) -> PyResult<Vec<f64>> {
        self.columns
            .get(column)
            .cloned()
            .ok_or_else(|| ConfigError::new_err(format!("unknown ledger column `{column}`")))
    }

    #[getter]
    fn ledger_csv(&self) -> &str {
        &self.ledger_csv
    }

    #[getter]
    fn regularized_cells(&self) -> usize {
        self.regularized_cells
    }

    #[getter]
    fn temperature_positive(&self) -> bool {
        self.temperature_positive
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Stored state `i` (negative indices count from the end).
    fn state(&self, i: isize) -> PyResult<PyState> {
        let n = self.states.len() as isize;
        let j = if i < 0 { n + i } else { i };
        if !(0..n).contains(&j) {
            return Err(ConfigError::new_err(format!("state index {i} out of range for {n} states")));
        }
        Ok(PyState { inner: self.states[j as usize].clone() })
    }

    /// Final stored state.
    fn final_state(&self) -> PyState {
        PyState { inner: self.states.last().expect("a run stores its initial state").clone() }
    }
}

fn ledger_columns(ledger: &hydride_core::diagnostics::DiagnosticsLedger) -> HashMap<String, Vec<f64>> {
    let mut cols: HashMap<String, Vec<f64>> = HashMap::new();
    let mut push = |k: &str, v: f64| cols.entry(k.to_string()).or_default().push(v);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    for r in ledger.rows() {
        push("step", r.step as f64);
        push("time", r.time);
        push("phase_bounds_ok", flag(r.phase_bounds_ok));
        for (name, v) in r.quantities() {
            push(name, v);
        }
        push("newton_iters", r.newton_iters as f64);
        push("cg_iters", r.cg_iters as f64);
        push("sweep_iters", r.sweep_iters as f64);
        push("dissipation_signs_ok", flag(r.dissipation_signs_ok));
        push("membership_residual", r.membership_residual);
    }
    cols
}

/// Runs the scheme from the configured initial data. The GIL is released
/// while stepping.
#[pyfunction]
fn run(py: Python<'_>, config: &PyConfig) -> PyResult<PyRunResult> {
    let cfg = config.inner.clone();
    let out = py
        .detach(move || -> Result<_, Error> {
            let scheme = Scheme::new(&cfg)?;
            let (theta0, chi0, p0) = scheme.initial_fields()?;
            scheme.run(&theta0, &chi0, &p0).map_err(|f| f.error)
        })
        .map_err(to_py)?;
    let positivity = positivity_report(&out.snapshots);
    Ok(PyRunResult {
        columns: ledger_columns(&out.ledger),
        ledger_csv: out.ledger.to_csv_string(),
        regularized_cells: out.regularized_cells,
        temperature_positive: positivity.temperature_positive(),
        states: out.snapshots,
    })
}

/// Spatial and temporal convergence study for a manufactured case. A grid
/// of another dimension than the case is replaced by the unit box with the
/// first-axis resolution.
///
/// Returns a dict with `passed`, per-study `orders` (one `[theta, chi, p]`
/// triple per refinement) and the formatted `table`.
#[pyfunction]
#[pyo3(signature = (config, case = "trig1d"))]
fn mms_study(py: Python<'_>, config: &PyConfig, case: &str) -> PyResult<HashMap<String, Py<PyAny>>> {
    let manufactured = mms::case(case).map_err(to_py)?;
    let cfg = manufactured.adapt_config(&config.inner).map_err(to_py)?;
    let report = py.detach(move || mms::mms_run(&manufactured, &cfg)).map_err(to_py)?;
    let mut out = HashMap::new();
    out.insert("passed".to_string(), report.passed().into_pyobject(py)?.to_owned().into_any().unbind());
    out.insert("spatial_orders".to_string(), report.spatial.orders().into_pyobject(py)?.into_any().unbind());
    out.insert("temporal_orders".to_string(), report.temporal.orders().into_pyobject(py)?.into_any().unbind());
    out.insert("table".to_string(), report.to_string().into_pyobject(py)?.into_any().unbind());
    Ok(out)
}

/// Admissibility constants `(c_h, c_h_prime, c_s)` of `h` on `[0, lambda_beta]`.
///
/// Raises `ConfigError` when `lambda_beta * c_h_prime >= 1`.
#[pyfunction]
#[pyo3(signature = (c1 = 0.25, c2 = 1.0, theta_star = 1.0, theta_star_star = 0.5, lambda_beta = 1.0))]
fn certify(c1: f64, c2: f64, theta_star: f64, theta_star_star: f64, lambda_beta: f64) -> PyResult<(f64, f64, f64)> {
    let h = HFunction::new(c1, c2, theta_star, theta_star_star).map_err(to_py)?;
    let adm = certify_h(&h, lambda_beta, DEFAULT_CERTIFY_SAMPLES).map_err(to_py)?;
    Ok((adm.c_h, adm.c_h_prime, adm.c_s))
}

#[pymodule]
fn hydride(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("HydrideError", py.get_type::<HydrideError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("InvariantViolation", py.get_type::<InvariantViolation>())?;
    m.add("SolverFailure", py.get_type::<SolverFailure>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(mms_study, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add("LEDGER_COLUMNS", LEDGER_COLUMNS.to_vec())?;
    Ok(())
}
