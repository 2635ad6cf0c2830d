//! Python bindings: the well, bilayer profile and coefficients, normal-form
//! orbits, pearl construction, the FCH model, and the CLI commands.

use fch_pearl::bilayer::{compute_u0, BilayerData, RadialGrid};
use fch_pearl::coefficients::{alpha0, CoefficientInputs, CoefficientTable};
use fch_pearl::config::{parse_config, Command};
use fch_pearl::normal_form::{
    first_integrals, integrate_nf, pnf_periodic_orbit, reversible_shoot, NFCoefficients, NFState, NFSystem,
};
use fch_pearl::operator::SpectralData;
use fch_pearl::pearl::{circular_radii, flat_pearl, PearlBounds};
use fch_pearl::potential::{Well as CoreWell, WellSpec};
use fch_pearl::runner;
use fch_pearl::simulator::{FchModel as CoreModel, Field2D};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: fch_pearl::Error) -> PyErr {
    match e {
        fch_pearl::Error::InvalidArgument(_) | fch_pearl::Error::Config { .. } | fch_pearl::Error::InvalidWell(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serializes through JSON into plain Python objects.
fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Well", from_py_object)]
#[derive(Clone)]
struct Well {
    inner: CoreWell,
}

#[pymethods]
impl Well {
    /// Cubic well `W'(u) = scale u (u+1)(u-m)`, or a polynomial `W'` from ascending `coeffs`.
    #[new]
    #[pyo3(signature = (m=1.5, scale=1.0, coeffs=None))]
    fn new(m: f64, scale: f64, coeffs: Option<Vec<f64>>) -> PyResult<Self> {
        let spec = match coeffs {
            Some(c) => WellSpec::polynomial(m, c),
            None => WellSpec { scale, ..WellSpec::cubic(m) },
        };
        Ok(Self { inner: CoreWell::new(spec).map_err(err)? })
    }

    fn w(&self, u: f64) -> f64 {
        self.inner.w(u)
    }

    fn dw(&self, u: f64) -> f64 {
        self.inner.dw(u)
    }

    fn d2w(&self, u: f64) -> f64 {
        self.inner.d2w(u)
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate())
    }
}

#[pyclass(name = "Bilayer")]
struct Bilayer {
    data: BilayerData,
    spectral: SpectralData,
}

#[pymethods]
impl Bilayer {
    #[new]
    #[pyo3(signature = (well, n=2049, half_width=None))]
    fn new(well: &Well, n: usize, half_width: Option<f64>) -> PyResult<Self> {
        let l = half_width.unwrap_or_else(|| RadialGrid::default_for(&well.inner).half_width);
        let grid = RadialGrid::new(l, n).map_err(err)?;
        let data = compute_u0(&well.inner, grid).map_err(err)?;
        let spectral = SpectralData::compute(&data).map_err(err)?;
        Ok(Self { data, spectral })
    }

    #[getter]
    fn r(&self) -> Vec<f64> {
        self.data.grid.nodes()
    }

    #[getter]
    fn u0(&self) -> Vec<f64> {
        self.data.u0.clone()
    }

    #[getter]
    fn du0(&self) -> Vec<f64> {
        self.data.du0.clone()
    }

    #[getter]
    fn u_star(&self) -> f64 {
        self.data.u_star
    }

    #[getter]
    fn lambda0(&self) -> f64 {
        self.spectral.lambda0
    }

    #[getter]
    fn psi0(&self) -> Vec<f64> {
        self.spectral.psi0.clone()
    }

    fn hamiltonian_residual(&self) -> f64 {
        self.data.hamiltonian_residual()
    }

    fn kernel_residual(&self) -> f64 {
        self.spectral.kernel_residual(&self.data.du0)
    }

    fn alpha0(&self, gamma: f64, eta_d: f64) -> PyResult<f64> {
        alpha0(&self.data, &self.spectral, gamma, eta_d).map_err(err)
    }

    /// Full coefficient table as a dict.
    #[pyo3(signature = (gamma=1.0, eta1=1.0, eta2=2.0))]
    fn coefficients<'py>(&self, py: Python<'py>, gamma: f64, eta1: f64, eta2: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.table(gamma, eta1, eta2)?)
    }

    /// Leading-order flat pearl: period, amplitude and transverse profiles.
    #[pyo3(signature = (epsilon, kappa, gamma=1.0, eta1=1.0, eta2=2.0))]
    fn flat_pearl<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        kappa: f64,
        gamma: f64,
        eta1: f64,
        eta2: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = self.table(gamma, eta1, eta2)?;
        let sol = flat_pearl(&self.data, &self.spectral, &t, epsilon, kappa, &PearlBounds::default_for(&t)).map_err(err)?;
        to_py(py, &sol)
    }

    /// Admissible `(beads, radius)` pairs for circular pearls.
    #[pyo3(signature = (epsilon, kappa, r_minus=1.0, count=10, gamma=1.0, eta1=1.0, eta2=2.0))]
    fn circular_radii(
        &self,
        epsilon: f64,
        kappa: f64,
        r_minus: f64,
        count: usize,
        gamma: f64,
        eta1: f64,
        eta2: f64,
    ) -> PyResult<Vec<(usize, f64)>> {
        let t = self.table(gamma, eta1, eta2)?;
        circular_radii(&t, epsilon, kappa, r_minus, &PearlBounds::default_for(&t), count).map_err(err)
    }
}

impl Bilayer {
    fn table(&self, gamma: f64, eta1: f64, eta2: f64) -> PyResult<CoefficientTable> {
        CoefficientTable::compute(&self.data, &self.spectral, CoefficientInputs { gamma, eta1, eta2 }).map_err(err)
    }
}

fn system_of(name: &str) -> PyResult<NFSystem> {
    match name {
        "pnf" => Ok(NFSystem::Pnf),
        "nf8" => Ok(NFSystem::Nf8),
        other => Err(PyValueError::new_err(format!("unknown system `{other}`; use `pnf` or `nf8`"))),
    }
}

/// Closed-form PNF orbit at `K = eps^{3/2} kappa` for a coefficient dict.
#[pyfunction]
fn pnf_orbit<'py>(py: Python<'py>, coefficients: &Bound<'py, PyAny>, kappa: f64) -> PyResult<Bound<'py, PyAny>> {
    let c: NFCoefficients = from_py(py, coefficients)?;
    to_py(py, &pnf_periodic_orbit(&c, kappa).map_err(err)?)
}

/// Reversible shooting for a periodic orbit of the eight-dimensional normal form.
#[pyfunction]
fn shoot_orbit<'py>(py: Python<'py>, coefficients: &Bound<'py, PyAny>, kappa: f64) -> PyResult<Bound<'py, PyAny>> {
    let c: NFCoefficients = from_py(py, coefficients)?;
    to_py(py, &reversible_shoot(&c, kappa, None).map_err(err)?)
}

/// Integrates from an 8-vector state; returns `(t, states)` at accepted steps.
#[pyfunction]
#[pyo3(signature = (coefficients, state, t_end, tol=1e-12, system="pnf"))]
fn integrate_normal_form<'py>(
    py: Python<'py>,
    coefficients: &Bound<'py, PyAny>,
    state: Vec<f64>,
    t_end: f64,
    tol: f64,
    system: &str,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    if state.len() != 8 {
        return Err(PyValueError::new_err("state needs 8 entries"));
    }
    let c: NFCoefficients = from_py(py, coefficients)?;
    let tr = integrate_nf(system_of(system)?, &c, &NFState::from_slice(&state, 0.0), t_end, tol).map_err(err)?;
    Ok((tr.t, tr.y))
}

/// `(K, H)` of an 8-vector state.
#[pyfunction(name = "first_integrals")]
fn py_first_integrals(py: Python<'_>, coefficients: &Bound<'_, PyAny>, state: Vec<f64>) -> PyResult<(f64, f64)> {
    if state.len() != 8 {
        return Err(PyValueError::new_err("state needs 8 entries"));
    }
    let c: NFCoefficients = from_py(py, coefficients)?;
    Ok(first_integrals(&NFState::from_slice(&state, 0.0), &c))
}

/// Normal-form coefficients from a computed table at `epsilon`.
#[pyfunction]
#[pyo3(signature = (bilayer, epsilon, gamma=1.0, eta1=1.0, eta2=2.0))]
fn normal_form_coefficients<'py>(
    py: Python<'py>,
    bilayer: &Bilayer,
    epsilon: f64,
    gamma: f64,
    eta1: f64,
    eta2: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let t = bilayer.table(gamma, eta1, eta2)?;
    to_py(py, &NFCoefficients::from_table(&t, epsilon).map_err(err)?)
}

#[pyclass(name = "FchModel")]
struct FchModel {
    inner: CoreModel,
    shape: (usize, usize, f64, f64),
}

#[pymethods]
impl FchModel {
    #[new]
    #[pyo3(signature = (well, epsilon, eta1, eta2, nx, ny, lx, ly))]
    #[allow(clippy::too_many_arguments)]
    fn new(well: &Well, epsilon: f64, eta1: f64, eta2: f64, nx: usize, ny: usize, lx: f64, ly: f64) -> PyResult<Self> {
        Field2D::constant(nx, ny, lx, ly, 0.0).map_err(err)?;
        Ok(Self {
            inner: CoreModel::new(well.inner.clone(), epsilon, eta1, eta2, nx, ny, lx, ly),
            shape: (nx, ny, lx, ly),
        })
    }

    /// Energy of a row-major field of `nx * ny` values.
    fn energy(&self, values: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.energy(&self.field(values)?))
    }

    fn variational_derivative(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.variational_derivative(&self.field(values)?).values)
    }

    /// One IMEX step with stabilization `a`.
    fn step(&self, values: Vec<f64>, dt: f64, a: f64) -> PyResult<Vec<f64>> {
        Ok(self.inner.step(&self.field(values)?, dt, a).map_err(err)?.values)
    }
}

impl FchModel {
    fn field(&self, values: Vec<f64>) -> PyResult<Field2D> {
        let (nx, ny, lx, ly) = self.shape;
        Field2D::new(nx, ny, lx, ly, values).map_err(err)
    }
}

/// Runs a CLI command (`profile`, `coeffs`, `pnf`, `orbit`, `construct`,
/// `simulate`, `verify`) and returns its summary dict.
#[pyfunction]
#[pyo3(signature = (command, config=None, overrides=Vec::new()))]
fn run_command<'py>(
    py: Python<'py>,
    command: &str,
    config: Option<std::path::PathBuf>,
    overrides: Vec<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let cmd: Command = serde_json::from_value(serde_json::Value::String(command.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown command `{command}`")))?;
    let cfg = parse_config(config.as_deref(), &overrides).map_err(err)?;
    let out = py.detach(|| runner::execute(&cfg, cmd)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", out.passed)?;
    d.set_item("summary", to_py(py, &out.summary)?)?;
    Ok(d.into_any())
}

#[pymodule]
pub fn fch_pearl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Well>()?;
    m.add_class::<Bilayer>()?;
    m.add_class::<FchModel>()?;
    m.add_function(wrap_pyfunction!(pnf_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(shoot_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(py_first_integrals, m)?)?;
    m.add_function(wrap_pyfunction!(normal_form_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
