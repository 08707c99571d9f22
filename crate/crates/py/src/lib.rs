//! Python bindings: models, synthesis, QASM and sweeps.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use qsynth::bench::{self, Family, SweepSpec};
use qsynth::circuit::{measure, Circuit};
use qsynth::domains::{ConstraintSet, Objective};
use qsynth::emitter::{parse_qasm, report_json, to_qasm, ReportInput};
use qsynth::solver::{SolveOptions, Status, Strategy};
use qsynth::synth::synthesize;
use std::time::Duration;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A functional model.
#[pyclass(name = "Model", module = "pyqsynth", frozen)]
struct PyModel {
    inner: qsynth::model::Model,
}

#[pymethods]
impl PyModel {
    /// Parses the JSON model format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: qsynth::model::parse_model(text).map_err(value_err)? })
    }

    #[staticmethod]
    fn walk(n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(PyValueError::new_err("n must be positive"));
        }
        Ok(PyModel { inner: bench::build_walk_model(n) })
    }

    #[staticmethod]
    fn block_encoding(n: usize) -> PyResult<Self> {
        if n < 2 {
            return Err(PyValueError::new_err("n must be at least 2"));
        }
        Ok(PyModel { inner: bench::build_block_encoding_model(n) })
    }

    #[staticmethod]
    fn qsvt(n: usize, phases: Vec<f64>) -> PyResult<Self> {
        if n < 2 || !phases.len().is_multiple_of(2) {
            return Err(PyValueError::new_err("need n >= 2 and an odd degree (even number of phases)"));
        }
        Ok(PyModel { inner: bench::build_qsvt_model(n, &phases) })
    }

    /// Number of declared qubits.
    #[getter]
    fn functional_width(&self) -> usize {
        self.inner.functional_width()
    }
}

/// Outcome of one synthesis run.
#[pyclass(name = "Result", module = "pyqsynth", frozen)]
struct PyResult_ {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    optimal: bool,
    #[pyo3(get)]
    width: Option<usize>,
    #[pyo3(get)]
    depth: Option<usize>,
    #[pyo3(get)]
    cx: Option<u64>,
    #[pyo3(get)]
    single: Option<u64>,
    #[pyo3(get)]
    qasm: Option<String>,
    report: String,
}

#[pymethods]
impl PyResult_ {
    /// The JSON report, as written by the CLI.
    fn report_json(&self) -> String {
        self.report.clone()
    }

    fn __repr__(&self) -> String {
        let show = |v: Option<u64>| v.map_or("None".to_string(), |x| x.to_string());
        format!(
            "Result(status={}, width={}, depth={}, cx={})",
            self.status,
            show(self.width.map(|w| w as u64)),
            show(self.depth.map(|d| d as u64)),
            show(self.cx)
        )
    }
}

fn objective(s: &str) -> PyResult<Objective> {
    Objective::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown objective `{s}`")))
}

#[pyfunction]
#[pyo3(signature = (model, objective="none", max_width=None, max_depth=None, max_cx=None, seed=0, timeout=None, strategies=None))]
#[allow(clippy::too_many_arguments)]
fn synthesize_model(
    py: Python<'_>,
    model: &PyModel,
    objective: &str,
    max_width: Option<usize>,
    max_depth: Option<usize>,
    max_cx: Option<u64>,
    seed: u64,
    timeout: Option<f64>,
    strategies: Option<Vec<String>>,
) -> PyResult<PyResult_> {
    let obj = self::objective(objective)?;
    let cons = ConstraintSet { max_width, max_depth, max_cx, max_single: None };
    let strategies = strategies
        .map(|v| {
            v.iter()
                .map(|s| Strategy::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown strategy `{s}`"))))
                .collect::<PyResult<Vec<_>>>()
        })
        .transpose()?;
    let opts = SolveOptions { seed, strategies, timeout: timeout.map(Duration::from_secs_f64), ..Default::default() };
    let m = model.inner.clone();
    let s = py
        .detach(move || synthesize(&m, &cons, obj, &opts).map(|s| (s, cons)))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let (s, cons) = s;
    let report =
        report_json(&ReportInput { result: &s.result, metrics: s.metrics, constraints: &cons, objective: obj, seed });
    let status = match s.result.status {
        Status::Optimal => "optimal",
        Status::Feasible => "feasible",
        Status::Infeasible => "infeasible",
        Status::Unknown => "unknown",
    };
    Ok(PyResult_ {
        status: status.into(),
        optimal: s.result.optimal(),
        width: s.metrics.map(|m| m.width),
        depth: s.metrics.map(|m| m.depth),
        cx: s.metrics.map(|m| m.counts.cx),
        single: s.metrics.map(|m| m.counts.single),
        qasm: s.circuit.as_ref().map(to_qasm),
        report: serde_json::to_string_pretty(&report).expect("report serializes"),
    })
}

/// Width, depth, CX and single-qubit counts of a QASM program.
#[pyfunction]
fn qasm_metrics(text: &str) -> PyResult<(usize, usize, u64, u64)> {
    let c: Circuit = parse_qasm(text).map_err(value_err)?;
    let m = measure(&c);
    Ok((m.width, m.depth, m.counts.cx, m.counts.single))
}

/// Runs a sweep and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (family, ns, widths, objective="cx", timeout=1000.0, seed=0, degree=3, baseline=false, jobs=1))]
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    py: Python<'_>,
    family: &str,
    ns: Vec<usize>,
    widths: Vec<Option<usize>>,
    objective: &str,
    timeout: f64,
    seed: u64,
    degree: usize,
    baseline: bool,
    jobs: usize,
) -> PyResult<String> {
    let family = Family::parse(family).ok_or_else(|| PyValueError::new_err(format!("unknown family `{family}`")))?;
    if ns.contains(&0) || timeout <= 0.0 || (family == Family::Qsvt && degree.is_multiple_of(2)) {
        return Err(PyValueError::new_err("need N >= 1, timeout > 0 and an odd QSVT degree"));
    }
    let spec = SweepSpec {
        family,
        ns,
        widths,
        objective: self::objective(objective)?,
        timeout: Duration::from_secs_f64(timeout),
        seed,
        degree,
        baseline,
        jobs,
    };
    let rows = py.detach(move || bench::run_sweep(&spec)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(bench::to_csv(&rows))
}

#[pymodule]
fn pyqsynth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyResult_>()?;
    m.add_function(wrap_pyfunction!(synthesize_model, m)?)?;
    m.add_function(wrap_pyfunction!(qasm_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
