//! Python bindings for `levy_action`.

#![allow(clippy::too_many_arguments)]

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyDict};

use levy_action::document::parse_model_str;
use levy_action::legendre::{legendre_transform, DEFAULT_TOL};
use levy_action::levy::{Atom, LevyMeasure, LevyTriplet};
use levy_action::minimize::{evaluate_action, minimize_action, BoundaryProblem, Functional, MinimizeOptions};
use levy_action::model::ModelSpec;
use levy_action::montecarlo::{self, EventSpec, LdpEstimate, McOptions};
use levy_action::path::Path;
use levy_action::simulate::{euler_maruyama, RngStream, SchemeOptions};
use levy_action::Error;

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for levy_action::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Lévy triplet `(a, σ², ν)`.
#[pyclass(name = "Triplet", module = "levy_action", frozen)]
struct PyTriplet {
    inner: LevyTriplet,
}

#[pymethods]
impl PyTriplet {
    #[staticmethod]
    #[pyo3(signature = (a=0.0, sigma2=1.0))]
    fn gaussian(a: f64, sigma2: f64) -> PyResult<Self> {
        Ok(Self { inner: LevyTriplet::gaussian(a, sigma2).py()? })
    }

    /// `N_t − t` for a unit-rate Poisson process.
    #[staticmethod]
    fn compensated_poisson() -> Self {
        Self { inner: LevyTriplet::compensated_poisson() }
    }

    /// Discrete measure from `(size, mass)` pairs.
    #[staticmethod]
    #[pyo3(signature = (atoms, a=0.0, sigma2=0.0))]
    fn atoms(atoms: Vec<(f64, f64)>, a: f64, sigma2: f64) -> PyResult<Self> {
        let nu = LevyMeasure::atoms(atoms.into_iter().map(|(size, mass)| Atom { size, mass }).collect()).py()?;
        Ok(Self { inner: LevyTriplet::new(a, sigma2, nu).py()? })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, m, a=0.0, sigma2=0.0))]
    fn tempered_stable(alpha: f64, m: f64, a: f64, sigma2: f64) -> PyResult<Self> {
        let nu = LevyMeasure::tempered_stable(alpha, m).py()?;
        Ok(Self { inner: LevyTriplet::new(a, sigma2, nu).py()? })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, a=0.0, sigma2=0.0))]
    fn exponential_tail(alpha: f64, a: f64, sigma2: f64) -> PyResult<Self> {
        let nu = LevyMeasure::exponential_tail(alpha).py()?;
        Ok(Self { inner: LevyTriplet::new(a, sigma2, nu).py()? })
    }

    /// `Ψ(ξ) = log E e^{ξL(1)}`; `inf` outside the exponential-moment domain.
    fn log_mgf(&self, xi: f64) -> PyResult<f64> {
        Ok(self.inner.log_mgf(xi, 0).py()?.value)
    }

    /// Characteristic exponent `ψ(ξ) = log E e^{iξL(1)}`.
    fn psi<'py>(&self, py: Python<'py>, xi: f64) -> PyResult<Bound<'py, PyComplex>> {
        let z = self.inner.psi(xi).py()?;
        Ok(PyComplex::from_doubles(py, z.re, z.im))
    }

    /// `Ψ*(p)`.
    fn conjugate(&self, p: f64) -> PyResult<f64> {
        Ok(legendre_transform(&self.inner, p, DEFAULT_TOL).py()?.value)
    }

    fn mean(&self) -> PyResult<f64> {
        self.inner.mean().py()
    }

    fn variance(&self) -> PyResult<f64> {
        self.inner.variance().py()
    }

    fn mgf_domain(&self) -> (f64, f64) {
        self.inner.mgf_domain()
    }
}

/// Coefficients, triplet, noise scale and default grid.
#[pyclass(name = "Model", module = "levy_action", frozen)]
struct PyModel {
    inner: ModelSpec,
}

#[pymethods]
impl PyModel {
    /// Parses a model document (JSON text).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_model_str(text).py()? })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: levy_action::document::parse_model(&path).py()? })
    }

    /// `dX = b dt + √ε σ dB`.
    #[staticmethod]
    #[pyo3(signature = (b, sigma, epsilon, n=100))]
    fn brownian(b: &str, sigma: &str, epsilon: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: ModelSpec::brownian(b, sigma, epsilon).py()?.with_grid(n) })
    }

    /// `dX = b dt + √ε σ dB + η dL^ε`.
    #[staticmethod]
    #[pyo3(signature = (b, sigma, eta, triplet, epsilon, n=100))]
    fn new(b: &str, sigma: &str, eta: &str, triplet: &PyTriplet, epsilon: f64, n: usize) -> PyResult<Self> {
        let c = levy_action::model::CoefficientSet::parse(b, sigma, eta).py()?;
        Ok(Self { inner: ModelSpec::new(c, triplet.inner.clone(), epsilon).py()?.with_grid(n) })
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    fn triplet(&self) -> PyTriplet {
        PyTriplet { inner: self.inner.triplet.clone() }
    }
}

fn path_from(values: Vec<f64>) -> PyResult<Path> {
    Path::new(values).py()
}

/// Discrete action of a named functional on grid values `φ(k/n)`.
#[pyfunction]
fn action(functional: &str, values: Vec<f64>, model: &PyModel) -> PyResult<f64> {
    let f = Functional::parse(functional).py()?;
    evaluate_action(f, &path_from(values)?, &model.inner).py()
}

/// `½∫|φ′|²` on grid values.
#[pyfunction]
fn action_brownian(values: Vec<f64>) -> PyResult<f64> {
    Ok(levy_action::action::action_brownian(&path_from(values)?))
}

#[pyfunction]
#[pyo3(signature = (model, x1, x0=0.0, n=None, functional=None, gtol=1e-8))]
fn minimize<'py>(py: Python<'py>, model: &PyModel, x1: f64, x0: f64, n: Option<usize>, functional: Option<&str>, gtol: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = &model.inner;
    let functional = match functional {
        Some(f) => Functional::parse(f).py()?,
        None => Functional::auto(m, x0),
    };
    let problem = BoundaryProblem { functional, model: m.clone(), x0, x1, n: n.unwrap_or(m.n) };
    let opts = MinimizeOptions { gtol, ..MinimizeOptions::default() };
    let r = py.detach(|| minimize_action(&problem, &opts)).py()?;
    let d = PyDict::new(py);
    d.set_item("values", r.path.values().to_vec())?;
    d.set_item("action", r.action)?;
    d.set_item("grad_norm", r.grad_norm)?;
    d.set_item("el_residual", r.el_residual)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// One Euler–Maruyama path on the grid `k/n`, from stream `(seed, stream)`.
#[pyfunction]
#[pyo3(signature = (model, n=None, seed=0, stream=0, start=0.0))]
fn simulate(model: &PyModel, n: Option<usize>, seed: u64, stream: u64, start: f64) -> PyResult<Vec<f64>> {
    let opts = SchemeOptions { start, ..SchemeOptions::default() };
    Ok(euler_maruyama(&model.inner, n.unwrap_or(model.inner.n), RngStream::new(seed, stream), &opts).py()?.path.into_values())
}

fn estimate_dict<'py>(py: Python<'py>, e: &LdpEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("epsilon", e.epsilon)?;
    d.set_item("p_hat", e.p_hat)?;
    d.set_item("ci95", e.ci95)?;
    d.set_item("rate_value", e.rate_value)?;
    d.set_item("n_samples", e.n_samples)?;
    d.set_item("hits", e.hits)?;
    d.set_item("no_hits", e.no_hits)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (model, event, n_samples, n=None, seed=0, threads=None))]
fn estimate_event<'py>(py: Python<'py>, model: &PyModel, event: &str, n_samples: u64, n: Option<usize>, seed: u64, threads: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let e = EventSpec::parse(event).py()?;
    let opts = McOptions { threads, ..McOptions::seeded(seed) };
    let m = &model.inner;
    let est = py.detach(|| montecarlo::estimate_event(m, &e, n_samples, n.unwrap_or(m.n), &opts)).py()?;
    estimate_dict(py, &est)
}

/// Rows of `ε log P` with the `−inf S` column, plus the fitted limit.
#[pyfunction]
#[pyo3(signature = (model, event, epsilons, n_samples, n=None, seed=0, threads=None))]
fn rate_table<'py>(
    py: Python<'py>,
    model: &PyModel,
    event: &str,
    epsilons: Vec<f64>,
    n_samples: u64,
    n: Option<usize>,
    seed: u64,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let e = EventSpec::parse(event).py()?;
    let opts = McOptions { threads, ..McOptions::seeded(seed) };
    let m = &model.inner;
    let t = py.detach(|| montecarlo::rate_table(m, &e, &epsilons, n_samples, n.unwrap_or(m.n), &opts)).py()?;
    let rows = t
        .rows
        .iter()
        .map(|r| {
            let d = estimate_dict(py, &r.estimate)?;
            d.set_item("neg_inf_S", r.neg_inf_s)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let out = PyDict::new(py);
    out.set_item("rows", rows)?;
    out.set_item("limit", t.fit.map(|f| f.c0))?;
    Ok(out)
}

/// Tail frequency of `‖X^{ε,m} − X^ε‖∞ > δ` on grid `n`.
#[pyfunction]
#[pyo3(signature = (model, n, m, n_samples, delta, seed=0, threads=None))]
fn equivalence_gap(py: Python<'_>, model: &PyModel, n: usize, m: usize, n_samples: u64, delta: f64, seed: u64, threads: Option<usize>) -> PyResult<f64> {
    let opts = McOptions { threads, ..McOptions::seeded(seed) };
    let mm = &model.inner;
    Ok(py.detach(|| montecarlo::equivalence_gap_sde(mm, n, m, n_samples, delta, &opts)).py()?.frequency)
}

/// `P(Z ≥ x)` for a standard normal.
#[pyfunction]
fn gaussian_tail(x: f64) -> f64 {
    montecarlo::gaussian_tail(x)
}

#[pymodule]
#[pyo3(name = "levy_action")]
fn levy_action_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTriplet>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(action_brownian, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_event, m)?)?;
    m.add_function(wrap_pyfunction!(rate_table, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_gap, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_tail, m)?)?;
    Ok(())
}
