use hjhomog::effective::{effective_at, effective_curve_for, EffectiveConfig};
use hjhomog::media::{sample_medium, MediumSample, MediumSpec};
use hjhomog::oracle;
use hjhomog::problem::{ProblemSpec, Realized};
use hjhomog::solver::{godunov_flux, solve_linear_datum, SolveConfig};
use hjhomog::verify::{run_suite, SuiteConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use std::cell::RefCell;

fn to_py(e: hjhomog::Error) -> PyErr {
    match e {
        hjhomog::Error::CflFailure { .. }
        | hjhomog::Error::BoundaryInfluence { .. }
        | hjhomog::Error::DomainCheck { .. }
        | hjhomog::Error::Quadrature(_)
        | hjhomog::Error::Bracket(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> PyResult<T> {
    match json {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string())),
        None => Ok(T::default()),
    }
}

/// Serialize through JSON into plain Python objects.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A realized medium.
#[pyclass(name = "Medium", frozen)]
struct PyMedium(MediumSample);

#[pymethods]
impl PyMedium {
    #[new]
    #[pyo3(signature = (spec_json, seed = 0))]
    fn new(spec_json: &str, seed: u64) -> PyResult<Self> {
        let spec: MediumSpec = serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self(sample_medium(&spec, seed).map_err(to_py)?))
    }

    fn eval(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn eval_many(&self, xs: Vec<f64>) -> Vec<f64> {
        xs.iter().map(|&x| self.0.eval(x)).collect()
    }

    fn provenance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.0.provenance())
    }
}

/// A Hamiltonian with its media and diffusion, realized at a seed.
#[pyclass(name = "Problem", frozen)]
struct PyProblem(Realized);

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (problem_json, seed = 0))]
    fn new(problem_json: &str, seed: u64) -> PyResult<Self> {
        let spec: ProblemSpec =
            serde_json::from_str(problem_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self(spec.realize(seed).map_err(to_py)?))
    }

    /// One of the built-in fixtures by name.
    #[staticmethod]
    #[pyo3(signature = (name, seed = 0))]
    fn fixture(name: &str, seed: u64) -> PyResult<Self> {
        let spec = match name {
            "quadratic" => hjhomog::fixtures::quadratic(0.0),
            "quadratic-viscous" => hjhomog::fixtures::quadratic(1.0),
            "periodic-cosine" => hjhomog::fixtures::periodic_cosine(),
            other => hjhomog::fixtures::pinned_fixtures()
                .into_iter()
                .find(|(n, _)| *n == other)
                .map(|(_, p)| p)
                .ok_or_else(|| PyValueError::new_err(format!("unknown fixture `{other}`")))?,
        };
        Ok(Self(spec.realize(seed).map_err(to_py)?))
    }

    fn eval(&self, x: f64, p: f64) -> f64 {
        self.0.hamiltonian.eval(x, p)
    }

    fn pins(&self) -> Vec<f64> {
        self.0.hamiltonian.pins().to_vec()
    }

    fn pinned_values(&self) -> Vec<f64> {
        self.0.hamiltonian.pinned_values().to_vec()
    }

    fn godunov_flux(&self, x: f64, p_minus: f64, p_plus: f64) -> f64 {
        godunov_flux(&self.0.hamiltonian, x, p_minus, p_plus)
    }

    /// Solve from `theta x`; returns `{"times", "xs", "values", "meta"}`.
    #[pyo3(signature = (theta, config_json = None))]
    fn solve_linear_datum<'py>(
        &self,
        py: Python<'py>,
        theta: f64,
        config_json: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg: SolveConfig = parse(config_json)?;
        let sol = py
            .detach(|| solve_linear_datum(&self.0.hamiltonian, &self.0.diffusion, theta, &cfg))
            .map_err(to_py)?;
        to_object(
            py,
            &serde_json::json!({
                "times": sol.times,
                "xs": sol.xs,
                "values": sol.values,
                "meta": sol.meta,
            }),
        )
    }

    #[pyo3(signature = (theta, config_json = None))]
    fn effective_at<'py>(&self, py: Python<'py>, theta: f64, config_json: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let cfg: EffectiveConfig = parse(config_json)?;
        let est = py
            .detach(|| effective_at(&self.0.hamiltonian, &self.0.diffusion, theta, self.0.seed, &cfg))
            .map_err(to_py)?;
        to_object(py, &est)
    }

    #[pyo3(signature = (thetas, config_json = None))]
    fn effective_curve<'py>(
        &self,
        py: Python<'py>,
        thetas: Vec<f64>,
        config_json: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg: EffectiveConfig = parse(config_json)?;
        let curve = py.detach(|| effective_curve_for(&self.0, &thetas, &cfg)).map_err(to_py)?;
        to_object(py, &curve)
    }
}

/// Effective Hamiltonian of `p^2/2 + v(x)` for 1-periodic `v`, by the cell formula.
#[pyfunction]
#[pyo3(signature = (v, theta, tol = 1e-10))]
fn periodic_cell_effective(v: &Bound<'_, PyAny>, theta: f64, tol: f64) -> PyResult<f64> {
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let f = |x: f64| match v.call1((x,)).and_then(|r| r.extract::<f64>()) {
        Ok(y) => y,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let result = oracle::periodic_cell_effective(&f, theta, tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(result.map_err(to_py)?.value)
}

/// Run a verification suite; returns the reports as dicts.
#[pyfunction]
#[pyo3(signature = (suite_json = None))]
fn verify<'py>(py: Python<'py>, suite_json: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: SuiteConfig = parse(suite_json)?;
    let reports = py.detach(|| run_suite(&cfg)).map_err(to_py)?;
    to_object(py, &reports)
}

#[pymodule]
fn hjhomog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMedium>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(periodic_cell_effective, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
