//! Python bindings for the corner-unfold library.
//!
//! Exposes the normal-form parameter type and the main operations: orbit
//! iteration, saddle and corner location, single-round border-collision
//! bifurcations, instability scans, mode-locking tongue scans, the crossing
//! certificate, and the unfolding validation suite.  Structured reports are
//! returned as plain Python dicts/lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use corner_unfold::geom::Point;
use corner_unfold::homoclinic;
use corner_unfold::modelock::{self, TongueScanSettings};
use corner_unfold::normal_form::{self, NormalFormParams};
use corner_unfold::periodic;
use corner_unfold::unfolding;

fn err(e: corner_unfold::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Convert any serialisable report into Python objects via its JSON form.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value::*;
    Ok(match v {
        Null => py.None().into_bound(py),
        Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        String(s) => s.into_pyobject(py)?.into_any(),
        Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

/// Border-collision normal-form parameters.
#[pyclass(name = "NormalFormParams", from_py_object)]
#[derive(Clone, Copy)]
struct PyParams {
    inner: NormalFormParams,
}

#[pymethods]
impl PyParams {
    #[new]
    fn new(tau_l: f64, delta_l: f64, tau_r: f64, delta_r: f64, mu: f64) -> Self {
        PyParams {
            inner: NormalFormParams::new(tau_l, delta_l, tau_r, delta_r, mu),
        }
    }

    #[getter]
    fn tau_l(&self) -> f64 {
        self.inner.tau_l
    }
    #[getter]
    fn delta_l(&self) -> f64 {
        self.inner.delta_l
    }
    #[getter]
    fn tau_r(&self) -> f64 {
        self.inner.tau_r
    }
    #[getter]
    fn delta_r(&self) -> f64 {
        self.inner.delta_r
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    /// Copy of these parameters with a different delta_R.
    fn with_delta_r(&self, delta_r: f64) -> Self {
        let mut p = self.inner;
        p.delta_r = delta_r;
        PyParams { inner: p }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "NormalFormParams(tau_l={}, delta_l={}, tau_r={}, delta_r={}, mu={})",
            p.tau_l, p.delta_l, p.tau_r, p.delta_r, p.mu
        )
    }
}

/// Saddle fixed point of the left piece: dict with point, eigenvalues and
/// eigenvectors.
#[pyfunction]
fn find_saddle<'py>(py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyAny>> {
    let saddle = normal_form::find_saddle(&params.inner).map_err(err)?;
    to_py(py, &saddle)
}

/// Iterate the map; returns (points, word, escaped_index_or_None).
#[pyfunction]
#[pyo3(signature = (params, x0, y0, steps, escape_radius = 1e6))]
fn iterate(
    params: &PyParams,
    x0: f64,
    y0: f64,
    steps: usize,
    escape_radius: f64,
) -> PyResult<(Vec<(f64, f64)>, String, Option<usize>)> {
    let seg = params
        .inner
        .to_map()
        .iterate(Point::new(x0, y0), steps, escape_radius)
        .map_err(err)?;
    let pts = seg.points.iter().map(|p| (p.x, p.y)).collect();
    Ok((pts, seg.realized_itinerary.to_string(), seg.escaped))
}

/// Lyapunov exponent from a single orbit.
#[pyfunction]
#[pyo3(signature = (params, x0 = 0.0, y0 = 0.0, transient = 1000, samples = 1_000_000, escape_radius = 1e8))]
fn lyapunov_exponent(
    params: &PyParams,
    x0: f64,
    y0: f64,
    transient: usize,
    samples: usize,
    escape_radius: f64,
) -> PyResult<f64> {
    params
        .inner
        .to_map()
        .lyapunov_exponent(Point::new(x0, y0), transient, samples, escape_radius)
        .map_err(err)
}

/// Homoclinic-corner value of delta_R located by bisection over a bracket.
#[pyfunction]
#[pyo3(signature = (params, lo, hi, kink_index = 0))]
fn locate_corner(params: &PyParams, lo: f64, hi: f64, kink_index: usize) -> PyResult<f64> {
    homoclinic::locate_corner(
        &params.inner,
        |p, d| NormalFormParams::new(p.tau_l, p.delta_l, p.tau_r, d, p.mu),
        lo,
        hi,
        kink_index,
    )
    .map_err(err)
}

/// Solve a periodic orbit with the given itinerary word; dict report.
#[pyfunction]
fn solve_periodic<'py>(
    py: Python<'py>,
    params: &PyParams,
    word: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let itin = corner_unfold::Itinerary::from_word(word).map_err(err)?;
    let orbit = periodic::solve_periodic(&params.inner.to_map(), &itin).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("word", orbit.itinerary.to_string())?;
    dict.set_item(
        "points",
        orbit.points.iter().map(|p| (p.x, p.y)).collect::<Vec<_>>(),
    )?;
    dict.set_item("trace", orbit.trace)?;
    dict.set_item("det", orbit.det)?;
    dict.set_item("admissibility_margin", orbit.admissibility_margin)?;
    dict.set_item("stable", orbit.stable)?;
    Ok(dict.into_any())
}

/// Single-round BCB values for periods n_lo..=n_hi at fixed tau_R; list of
/// dicts with n, branch, delta_R and the colliding point.
#[pyfunction]
fn single_round_bcbs<'py>(
    py: Python<'py>,
    params: &PyParams,
    n_lo: usize,
    n_hi: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let exc = periodic::extract_excursion(&params.inner).map_err(err)?;
    let list = PyList::empty(py);
    for n in n_lo..=n_hi {
        for branch in [periodic::Branch::X, periodic::Branch::Y] {
            let b = periodic::locate_single_round_bcb(&params.inner, &exc, n, branch)
                .map_err(err)?;
            let dict = PyDict::new(py);
            dict.set_item("n", b.n)?;
            dict.set_item("branch", b.branch.label())?;
            dict.set_item("delta_r", b.xi)?;
            dict.set_item("x_on_switching", (b.x_on_switching.x, b.x_on_switching.y))?;
            dict.set_item("trace", b.trace)?;
            dict.set_item("det", b.det)?;
            list.append(dict)?;
        }
    }
    Ok(list.into_any())
}

/// Admissible periodic orbits with at most `max_rounds` excursions per
/// period, up to `max_period`; list of dicts with spectral radii.
#[pyfunction]
#[pyo3(signature = (params, max_period = 24, max_rounds = 2))]
fn scan_round_instability<'py>(
    py: Python<'py>,
    params: &PyParams,
    max_period: usize,
    max_rounds: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let reports = periodic::scan_round_instability(&params.inner.to_map(), max_period, max_rounds)
        .map_err(err)?;
    let list = PyList::empty(py);
    for r in reports {
        let dict = PyDict::new(py);
        dict.set_item("word", r.itinerary.to_string())?;
        dict.set_item("period", r.period)?;
        dict.set_item("spectral_radius", r.spectral_radius)?;
        dict.set_item("admissibility_margin", r.admissibility_margin)?;
        dict.set_item("point", (r.point.x, r.point.y))?;
        list.append(dict)?;
    }
    Ok(list.into_any())
}

/// Mode-locking tongue scan over the (tau_R, delta_R) plane; list of
/// occupied cell dicts.  tau_L, delta_L and mu are taken from `params`.
#[pyfunction]
#[pyo3(signature = (params, tau_range = (-1.5, 1.5), delta_range = (0.0, 1.6),
                    n_tau = 801, n_delta = 601, period_cap = 30,
                    include_single_round = true))]
#[allow(clippy::too_many_arguments)]
fn scan_tongues<'py>(
    py: Python<'py>,
    params: &PyParams,
    tau_range: (f64, f64),
    delta_range: (f64, f64),
    n_tau: usize,
    n_delta: usize,
    period_cap: usize,
    include_single_round: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let settings = TongueScanSettings {
        tau_range,
        delta_range,
        n_tau,
        n_delta,
        period_cap,
        include_single_round,
    };
    let grid = modelock::scan_tongues(&params.inner, &settings).map_err(err)?;
    let list = PyList::empty(py);
    for c in grid.occupied() {
        let dict = PyDict::new(py);
        dict.set_item("i", c.i)?;
        dict.set_item("j", c.j)?;
        dict.set_item("tau_r", c.tau_r)?;
        dict.set_item("delta_r", c.delta_r)?;
        dict.set_item("period", c.period)?;
        dict.set_item("margin", c.margin)?;
        dict.set_item("spectral_radius", c.spectral_radius)?;
        list.append(dict)?;
    }
    Ok(list.into_any())
}

/// Transverse-crossing certificate for the given parameters; nested dict.
#[pyfunction]
fn crossing_certificate<'py>(py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyAny>> {
    let cert = homoclinic::crossing_certificate(&params.inner).map_err(err)?;
    to_py(py, &cert)
}

/// Seeded validation of the unfolding asymptotics on synthetic maps; dict
/// report with error bounds, fit residuals and quadrant coverage.
#[pyfunction]
#[pyo3(signature = (seed = 12345, draws = 100, k_range = (6, 14), quadratic = false))]
fn run_validation_suite<'py>(
    py: Python<'py>,
    seed: u64,
    draws: usize,
    k_range: (u32, u32),
    quadratic: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let report = unfolding::run_validation_suite(seed, draws, k_range, quadratic).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn corner_unfold_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(find_saddle, m)?)?;
    m.add_function(wrap_pyfunction!(iterate, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(locate_corner, m)?)?;
    m.add_function(wrap_pyfunction!(solve_periodic, m)?)?;
    m.add_function(wrap_pyfunction!(single_round_bcbs, m)?)?;
    m.add_function(wrap_pyfunction!(scan_round_instability, m)?)?;
    m.add_function(wrap_pyfunction!(scan_tongues, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(run_validation_suite, m)?)?;
    Ok(())
}
