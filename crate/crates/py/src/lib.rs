//! Python bindings for the `ocrdir` registration toolkit.
//!
//! Images cross the boundary as lists of rows (`n` rows of `m` values), the
//! same orientation as image files.

use ocrdir::emit::per_step_csv;
use ocrdir::engine::{self, DemonsParams};
use ocrdir::meshq::{det_jacobian, unfold_indicator};
use ocrdir::metrics::MetricsReport;
use ocrdir::synth::PairKind;
use ocrdir::{CompositeKind, Error, GridSpec, ScalarField};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<f64>>;

pyo3::create_exception!(ocrdir_py, RegistrationAborted, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Input { .. } => PyIOError::new_err(e.to_string()),
        Error::SolverFailure { .. }
        | Error::CorrectionFailure(_)
        | Error::DegenerateHomotopy { .. }
        | Error::NonFinite { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows_of(f: &ScalarField) -> Vec<Vec<f64>> {
    f.values()
        .chunks(f.spec().m())
        .map(<[f64]>::to_vec)
        .collect()
}

fn field_from_rows(rows: Vec<Vec<f64>>) -> PyResult<ScalarField> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    let spec = GridSpec::new(m, n).map_err(to_py)?;
    ScalarField::new(spec, rows.concat()).map_err(to_py)
}

/// Grayscale image on the unit square.
#[pyclass(frozen, skip_from_py_object, module = "ocrdir_py")]
#[derive(Clone)]
struct Image {
    inner: ocrdir::Image,
}

#[pymethods]
impl Image {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: ocrdir::Image::from_field(field_from_rows(rows)?),
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.spec().m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.spec().n()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner)
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __repr__(&self) -> String {
        format!("Image(m={}, n={})", self.m(), self.n())
    }
}

/// Outcome of a registration run.
#[pyclass(frozen, module = "ocrdir_py")]
struct Registration {
    inner: engine::RegistrationResult,
}

fn metrics_dict<'py>(py: Python<'py>, m: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("re_ssd", m.re_ssd)?;
    d.set_item("ssim", m.ssim)?;
    d.set_item("psnr", m.psnr)?;
    d.set_item("det_mean", m.det_mean)?;
    d.set_item("det_min", m.det_min)?;
    d.set_item("det_max", m.det_max)?;
    d.set_item("r_min", m.r_min)?;
    d.set_item("runtime_s", m.runtime_s)?;
    Ok(d)
}

#[pymethods]
impl Registration {
    /// Metrics as a dict; `re_ssd` is `None` when the inputs coincide.
    #[getter]
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        metrics_dict(py, &self.inner.metrics)
    }

    #[getter]
    fn warped(&self) -> Image {
        Image {
            inner: ocrdir::Image::from_field(self.inner.warped.clone()),
        }
    }

    /// `(u1_rows, u2_rows)`, the displacement `ω - x`.
    #[getter]
    fn displacement(&self) -> (Rows, Rows) {
        let u = &self.inner.displacement;
        (rows_of(u.comp1()), rows_of(u.comp2()))
    }

    #[getter]
    fn det_jacobian(&self) -> Vec<Vec<f64>> {
        rows_of(&det_jacobian(&self.inner.omega_final))
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.per_step.len()
    }

    fn per_step_csv(&self) -> String {
        per_step_csv(&self.inner.per_step)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner.metrics;
        format!(
            "Registration(re_ssd={:?}, r_min={:.4}, steps={})",
            m.re_ssd,
            m.r_min,
            self.inner.per_step.len()
        )
    }
}

/// Synthetic `(template, reference)` pair: `circle_square`,
/// `translated_blob`, `c_shape` or `brain_blob`.
#[pyfunction]
#[pyo3(signature = (kind, m, n, seed = 0))]
fn gen_pair(kind: &str, m: usize, n: usize, seed: u64) -> PyResult<(Image, Image)> {
    let kind: PairKind = kind.parse().map_err(to_py)?;
    let (t, r) = ocrdir::synth::gen_pair(kind, m, n, seed).map_err(to_py)?;
    Ok((Image { inner: t }, Image { inner: r }))
}

/// Reads an 8/16-bit grayscale PGM or PNG, normalised to `[0, 1]`.
#[pyfunction]
fn load_image(path: &str) -> PyResult<Image> {
    Ok(Image {
        inner: ocrdir::io::load_image(path).map_err(to_py)?,
    })
}

#[pyfunction]
fn save_pgm(image: PyRef<'_, Image>, path: &str) -> PyResult<()> {
    ocrdir::io::write_pgm(path, &image.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (
    template, reference, *, tau = 5.0, beta = 0.01, gamma = 0.01, n_steps = 40,
    max_inner = 5, tol = 1e-6, rho = 0.01, eps = 1e-2, sigma_eps = 0.01,
    composite = "P1", dt_cap = None,
))]
#[allow(clippy::too_many_arguments)]
fn register(
    py: Python<'_>,
    template: PyRef<'_, Image>,
    reference: PyRef<'_, Image>,
    tau: f64,
    beta: f64,
    gamma: f64,
    n_steps: usize,
    max_inner: usize,
    tol: f64,
    rho: f64,
    eps: f64,
    sigma_eps: f64,
    composite: &str,
    dt_cap: Option<f64>,
) -> PyResult<Registration> {
    let composite: CompositeKind = composite.parse().map_err(to_py)?;
    let cfg = engine::Config {
        tau,
        beta,
        gamma,
        n_steps,
        max_inner,
        tol,
        rho,
        eps,
        sigma_eps,
        composite,
        dt_cap,
        ..Default::default()
    };
    let (t, r) = (template.inner.clone(), reference.inner.clone());
    match py.detach(|| engine::register(&t, &r, &cfg)) {
        Ok(inner) => Ok(Registration { inner }),
        Err(ab) => match ab.error {
            Error::InvalidParameter(_)
            | Error::ShapeMismatch { .. }
            | Error::InvalidGrid { .. } => Err(to_py(ab.error)),
            _ => Err(RegistrationAborted::new_err(ab.to_string())),
        },
    }
}

/// Active demons baseline; returns the full registration record.
#[pyfunction]
#[pyo3(signature = (template, reference, *, sigma = 10f64.sqrt(), tau_norm = 0.8, iters = 200, eps = 1e-2))]
fn register_demons(
    py: Python<'_>,
    template: PyRef<'_, Image>,
    reference: PyRef<'_, Image>,
    sigma: f64,
    tau_norm: f64,
    iters: usize,
    eps: f64,
) -> PyResult<Registration> {
    let p = DemonsParams {
        sigma,
        tau_norm,
        iters,
    };
    let (t, r) = (template.inner.clone(), reference.inner.clone());
    let inner = py
        .detach(|| engine::register_demons(&t, &r, &p, eps))
        .map_err(to_py)?;
    Ok(Registration { inner })
}

/// Displacement field of the active demons baseline, in domain units.
#[pyfunction]
#[pyo3(signature = (template, reference, sigma = 10f64.sqrt(), tau_norm = 0.8, iters = 200))]
fn active_demons(
    template: PyRef<'_, Image>,
    reference: PyRef<'_, Image>,
    sigma: f64,
    tau_norm: f64,
    iters: usize,
) -> PyResult<(Rows, Rows)> {
    let u = engine::active_demons(&template.inner, &reference.inner, sigma, tau_norm, iters)
        .map_err(to_py)?;
    Ok((rows_of(u.comp1()), rows_of(u.comp2())))
}

/// Smallest triangle ratio of the grid `x + u`.
#[pyfunction]
fn min_triangle_ratio(u1: Vec<Vec<f64>>, u2: Vec<Vec<f64>>) -> PyResult<f64> {
    let (a, b) = (field_from_rows(u1)?, field_from_rows(u2)?);
    let spec = a.spec();
    if b.spec() != spec {
        return Err(PyValueError::new_err(
            "displacement components differ in shape",
        ));
    }
    let omega = ocrdir::Deformation::from_fn(spec, |i, j| {
        let [x, y] = spec.center(i as isize, j as isize);
        [x + a.get(i, j), y + b.get(i, j)]
    });
    Ok(unfold_indicator(&omega, 0.0).r_min)
}

#[pyfunction]
fn re_ssd(
    template: PyRef<'_, Image>,
    reference: PyRef<'_, Image>,
    warped: PyRef<'_, Image>,
) -> PyResult<Option<f64>> {
    match ocrdir::metrics::re_ssd(&template.inner, &reference.inner, &warped.inner) {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedDenominator) => Ok(None),
        Err(e) => Err(to_py(e)),
    }
}

#[pyfunction]
fn ssim(reference: PyRef<'_, Image>, warped: PyRef<'_, Image>) -> PyResult<f64> {
    ocrdir::metrics::ssim(&reference.inner, &warped.inner).map_err(to_py)
}

#[pyfunction]
fn psnr(reference: PyRef<'_, Image>, warped: PyRef<'_, Image>) -> PyResult<f64> {
    ocrdir::metrics::psnr(&reference.inner, &warped.inner).map_err(to_py)
}

#[pymodule]
mod ocrdir_py {
    #[pymodule_export]
    use super::{
        active_demons, gen_pair, load_image, min_triangle_ratio, psnr, re_ssd, register,
        register_demons, save_pgm, ssim, Image, Registration, RegistrationAborted,
    };
}
