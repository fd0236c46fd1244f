//! Python bindings: system evaluation, switching-pattern tools, closed-loop
//! runs and CSV export.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chaossync_core::analysis::{self, export_figure_set, lyapunov_monotone, LYAPUNOV_RIPPLE};
use chaossync_core::scheme::{self, ValidationOptions};
use chaossync_core::{
    convergence_report, decay_residual, run_closed_loop, ClosedLoopTrace, Error, Overrides,
    Registry, Role, RunSpec, SimConfig, StateVector, SwitchAssignment, SwitchTuple, Wiring,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(chaossync, DivergenceError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Divergence { .. } => DivergenceError::new_err(e.to_string()),
        Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn wirings(slots: Vec<(usize, usize, usize)>) -> Vec<Wiring> {
    slots
        .into_iter()
        .map(|(i, j, l)| Wiring::new(i, j, l))
        .collect()
}

/// Evaluates a registered vector field, optionally with parameter overrides.
#[pyfunction]
#[pyo3(signature = (name, state, params=None))]
fn eval_system(
    name: &str,
    state: Vec<f64>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<Vec<f64>> {
    let mut def = Registry::with_builtins().lookup(name).map_err(to_py)?;
    for (k, v) in params.unwrap_or_default() {
        def = def.with_param(&k, v).map_err(to_py)?;
    }
    let x = StateVector::new(state).map_err(to_py)?;
    Ok(def.eval(&x).map_err(to_py)?.into_inner())
}

/// Names of the registered systems.
#[pyfunction]
fn systems() -> Vec<String> {
    Registry::with_builtins()
        .names()
        .map(str::to_string)
        .collect()
}

/// Pattern class of a 1-based index tuple, e.g. `"j=m≠i≠l"`.
#[pyfunction]
fn classify_pattern(i: usize, j: usize, l: usize, m: usize) -> &'static str {
    scheme::classify_pattern(SwitchTuple::new(i, j, l, m)).name()
}

/// Problems with an assignment; an empty list means it is valid.
///
/// Each block is a list of `(i, j, l)` triples, one per slot.
#[pyfunction]
#[pyo3(signature = (block1, block2, allow_non_permutation=false))]
fn validate_assignment(
    block1: Vec<(usize, usize, usize)>,
    block2: Vec<(usize, usize, usize)>,
    allow_non_permutation: bool,
) -> Vec<String> {
    let n = block1.len();
    let a = SwitchAssignment::new(wirings(block1), wirings(block2));
    let v = scheme::validate_assignment(
        &a,
        n,
        ValidationOptions {
            allow_non_permutation,
        },
    );
    v.errors.iter().map(|e| e.to_string()).collect()
}

/// `(valid, total, {class: count})` over all tuples in `1..=n`.
#[pyfunction]
fn enumerate_patterns(n: usize) -> PyResult<(usize, usize, BTreeMap<&'static str, usize>)> {
    let c = scheme::enumerate_patterns(n).map_err(to_py)?;
    let counts = c.counts.iter().map(|(k, v)| (k.name(), *v)).collect();
    Ok((c.valid, c.total, counts))
}

/// A recorded closed-loop run.
#[pyclass(frozen, module = "chaossync")]
struct Trace {
    inner: ClosedLoopTrace,
}

#[pymethods]
impl Trace {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().collect()
    }

    /// Error labels such as `"e11_2131"`, in column order of [`Trace::errors`].
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.assignment.error_labels()
    }

    /// One row per sample: block-1 errors followed by block-2 errors.
    #[getter]
    fn errors(&self) -> Vec<Vec<f64>> {
        self.inner
            .samples
            .iter()
            .map(|s| s.error.stacked())
            .collect()
    }

    #[getter]
    fn norms(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.error.norm()).collect()
    }

    /// Time series of one system's state, e.g. `trace.states("z1")`.
    fn states(&self, role: &str) -> PyResult<Vec<Vec<f64>>> {
        let r = Role::ALL
            .into_iter()
            .find(|r| r.label() == role)
            .ok_or_else(|| PyValueError::new_err(format!("unknown role {role:?}")))?;
        Ok(self
            .inner
            .samples
            .iter()
            .map(|s| s.state(r).to_vec())
            .collect())
    }

    /// Largest deviation from `e(0) exp(-gain t)`.
    fn decay_residual(&self) -> f64 {
        decay_residual(&self.inner, self.inner.gain)
    }

    fn lyapunov_monotone(&self) -> bool {
        lyapunov_monotone(&self.inner, LYAPUNOV_RIPPLE)
    }

    /// Settling time per error label (`None` if never settled).
    #[pyo3(signature = (threshold=1e-3))]
    fn settling_times(&self, threshold: f64) -> PyResult<BTreeMap<String, Option<f64>>> {
        let r = convergence_report(&self.inner, threshold).map_err(to_py)?;
        Ok(r.settling.into_iter().map(|s| (s.label, s.time)).collect())
    }

    /// Full trace as CSV text (same layout as the command-line tool).
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        analysis::export_trace_csv(&self.inner, &mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(samples={}, t_end={}, final_norm={:.3e})",
            self.inner.len(),
            self.inner.samples.last().map_or(0.0, |s| s.t),
            self.inner.samples.last().map_or(0.0, |s| s.error.norm())
        )
    }
}

/// Runs a TOML config, or the built-in worked example when `config` is None.
#[pyfunction]
#[pyo3(signature = (config=None, *, dt=None, t_end=None, gain=None, policy=None, variant=None))]
fn simulate(
    py: Python<'_>,
    config: Option<&str>,
    dt: Option<f64>,
    t_end: Option<f64>,
    gain: Option<f64>,
    policy: Option<&str>,
    variant: Option<&str>,
) -> PyResult<Trace> {
    let mut spec = match config {
        Some(text) => RunSpec::from_toml_str(text).map_err(to_py)?,
        None => RunSpec::paper(),
    };
    spec.apply_overrides(&Overrides {
        dt,
        t_end,
        gain,
        policy: policy
            .map(str::parse)
            .transpose()
            .map_err(PyValueError::new_err)?,
        variant: variant
            .map(str::parse)
            .transpose()
            .map_err(PyValueError::new_err)?,
        out: None,
    });
    let cfg = spec
        .to_sim_config(&Registry::with_builtins())
        .map_err(to_py)?;
    let inner = py.detach(|| run_closed_loop(&cfg)).map_err(to_py)?;
    Ok(Trace { inner })
}

/// TOML text of the built-in worked example, a starting point for edits.
#[pyfunction]
fn paper_config() -> PyResult<String> {
    RunSpec::paper().to_toml_string().map_err(to_py)
}

/// Writes the worked-example figure CSVs into `out_dir`; returns their paths.
#[pyfunction]
fn reproduce_paper(py: Python<'_>, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
    py.detach(|| {
        let trace = run_closed_loop(&SimConfig::paper())?;
        export_figure_set(&trace, &out_dir)
    })
    .map_err(to_py)
}

#[pymodule]
fn chaossync(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eval_system, m)?)?;
    m.add_function(wrap_pyfunction!(systems, m)?)?;
    m.add_function(wrap_pyfunction!(classify_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(validate_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_patterns, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(paper_config, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_paper, m)?)?;
    m.add_class::<Trace>()?;
    m.add("DivergenceError", m.py().get_type::<DivergenceError>())?;
    Ok(())
}
