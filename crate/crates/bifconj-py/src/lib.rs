//! Python bindings for the bifurcation-conjugacy toolkit: bifurcation
//! classification, the verification suites, conjugacy construction and
//! evaluation, and the step-alignment experiments, importable as
//! `bifconj_py`.
//!
//! Structured results (classification records, verification reports,
//! alignment data) cross the boundary as plain dicts and lists so they
//! compose with the scientific Python stack without extra wrapper types.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;

use bifconj::conjugacy::{
    build_conjugacy_with, conjugacy_residual, eval_conjugacy, pointwise_defect, BuildOptions,
    ConjugacyMap, SequenceOptions,
};
use bifconj::estimates::{run_suite, SUITE_NAMES};
use bifconj::experiments::{compute_alignment, orbit_closeness_experiment};
use bifconj::fixedpoints::classify_bifurcation_with_tol;
use bifconj::maps::{make_pf_normal_form, make_tc_normal_form, CatalogMap, NormalForm, Tail};
use bifconj::{BifKind, HalfPlane, Region};

fn err(e: bifconj::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable result into plain Python objects
/// (dict/list/float/int/bool/str/None).
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn parse_kind(s: &str) -> PyResult<BifKind> {
    match s {
        "tc" => Ok(BifKind::Tc),
        "pf" => Ok(BifKind::Pf),
        other => Err(PyValueError::new_err(format!(
            "unknown kind '{other}' (expected tc or pf)"
        ))),
    }
}

fn parse_region(s: &str) -> PyResult<Region> {
    match s {
        "inner" => Ok(Region::Inner),
        "outer" => Ok(Region::Outer),
        other => Err(PyValueError::new_err(format!(
            "unknown region '{other}' (expected inner or outer)"
        ))),
    }
}

fn parse_half_plane(s: &str) -> PyResult<HalfPlane> {
    match s {
        "lower" => Ok(HalfPlane::Lower),
        "upper" => Ok(HalfPlane::Upper),
        other => Err(PyValueError::new_err(format!(
            "unknown half-plane '{other}' (expected lower or upper)"
        ))),
    }
}

/// A conjugacy between the zero-tail normal form of a bifurcation and a
/// tailed one, built on one region of the state space.
///
/// `Conjugacy(kind, h, alpha, p, region, tail=None, half_plane=None,
/// allow_outside_box=False)` — `kind` is `"tc"` or `"pf"`, `region` is
/// `"inner"` or `"outer"`, `tail` names the target perturbation (`"zero"`,
/// `"hp_power:k"`, `"sin"`; defaults to `hp_power:p`), and `half_plane`
/// (`"lower"`/`"upper"`) defaults to the side on which the requested
/// region exists.
#[pyclass]
struct Conjugacy {
    j: ConjugacyMap,
}

fn make_form(kind: BifKind, tail: Tail) -> PyResult<NormalForm> {
    match kind {
        BifKind::Tc => make_tc_normal_form(tail, 1.0, 1.0),
        BifKind::Pf => make_pf_normal_form(tail, 1.0, -1.0),
    }
    .map_err(err)
}

#[pymethods]
impl Conjugacy {
    #[new]
    #[pyo3(signature = (kind, h, alpha, p, region, tail = None, half_plane = None, allow_outside_box = false))]
    fn new(
        kind: &str,
        h: f64,
        alpha: f64,
        p: u32,
        region: &str,
        tail: Option<&str>,
        half_plane: Option<&str>,
        allow_outside_box: bool,
    ) -> PyResult<Self> {
        let kind = parse_kind(kind)?;
        let region = parse_region(region)?;
        if !(1..=8).contains(&p) {
            return Err(PyValueError::new_err(format!(
                "order parameter p must lie in 1..=8, got {p}"
            )));
        }
        let tail = match tail {
            None => Tail::HpPower(p),
            Some(name) => Tail::from_name(name).map_err(err)?,
        };
        let half = match half_plane {
            Some(s) => parse_half_plane(s)?,
            None => match (kind, region) {
                (BifKind::Tc, Region::Inner) if alpha < 0.0 => HalfPlane::Upper,
                _ => HalfPlane::Lower,
            },
        };
        let target = make_form(kind, tail)?;
        let source = make_form(kind, Tail::Zero)?;
        let options = if allow_outside_box {
            BuildOptions {
                z0: None,
                seq: SequenceOptions {
                    allow_outside_box: true,
                    ..SequenceOptions::default()
                },
            }
        } else {
            BuildOptions::default()
        };
        let j = build_conjugacy_with(&target, &source, h, alpha, region, half, &options)
            .map_err(err)?;
        Ok(Conjugacy { j })
    }

    /// The closed interval on which the conjugacy is defined.
    fn interval(&self) -> (f64, f64) {
        self.j.interval()
    }

    /// Value of the conjugacy at one point of the interval.
    fn eval(&self, x: f64) -> PyResult<f64> {
        eval_conjugacy(&self.j, x).map_err(err)
    }

    /// Values of the conjugacy at every point of `xs`, bit-identical to
    /// per-point `eval` calls but faster on large batches.
    fn eval_many(&self, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        self.j.eval_many(&xs).map_err(err)
    }

    /// Maximum conjugation defect over a uniform grid of `grid_size`
    /// points on the interval.
    #[pyo3(signature = (grid_size = 1024))]
    fn residual(&self, grid_size: usize) -> PyResult<f64> {
        conjugacy_residual(&self.j, grid_size).map_err(err)
    }

    /// Conjugation defect at one point.
    fn defect(&self, x: f64) -> PyResult<f64> {
        pointwise_defect(&self.j, x).map_err(err)
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.j.interval();
        format!("Conjugacy(interval=({lo:e}, {hi:e}))")
    }
}

/// Classify the bifurcation of a catalog map at `(x, alpha) = (0, 0)`.
///
/// Returns `{"verdict": ..., "conditions": [...], "discriminant": ...}`
/// with one record per derivative condition.
#[pyfunction]
#[pyo3(signature = (name, p = 1, h = 0.1, tol = 1e-7))]
fn classify_map(py: Python<'_>, name: &str, p: u32, h: f64, tol: f64) -> PyResult<Py<PyAny>> {
    let map = CatalogMap::from_name(name, p).map_err(err)?;
    let class = classify_bifurcation_with_tol(&map, h, tol).map_err(err)?;
    to_py(py, &class)
}

/// Run a named verification suite; returns one report dict per check.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Py<PyAny>> {
    let reports = run_suite(suite, seed).map_err(err)?;
    to_py(py, &reports)
}

/// Names of the available verification suites.
#[pyfunction]
fn suite_names() -> Vec<String> {
    SUITE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Align the fourth-order Runge-Kutta step to the exact model flow at
/// `(h, alpha)`: returns the aligned parameter, the state rescaling, and
/// the power-series residuals of both.
#[pyfunction]
fn alignment(py: Python<'_>, h: f64, alpha: f64) -> PyResult<Py<PyAny>> {
    let pair = compute_alignment(h, alpha).map_err(err)?;
    to_py(py, &pair)
}

/// Normalized difference between the exact flow orbit and the aligned
/// discrete orbit from `x0`, over `n_steps` steps; `perturb` offsets the
/// aligned parameter (0 keeps the alignment exact). Returns
/// `{"values": [...], "sup": ..., ...}`.
#[pyfunction]
#[pyo3(signature = (h, x0, alpha, n_steps, perturb = 0.0))]
fn orbit_closeness(
    py: Python<'_>,
    h: f64,
    x0: f64,
    alpha: f64,
    n_steps: usize,
    perturb: f64,
) -> PyResult<Py<PyAny>> {
    let diff = orbit_closeness_experiment(h, x0, alpha, n_steps, perturb).map_err(err)?;
    to_py(py, &diff)
}

#[pymodule]
fn bifconj_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Conjugacy>()?;
    m.add_function(wrap_pyfunction!(classify_map, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(suite_names, m)?)?;
    m.add_function(wrap_pyfunction!(alignment, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_closeness, m)?)?;
    Ok(())
}
