//! Python bindings: `import aldar`.
//!
//! Reports come back as plain dictionaries; series are lists of floats.

use aldar_core::asymtest::{asymmetry_tests as run_tests, PsiSource};
use aldar_core::diagnostics::portmanteau as run_portmanteau;
use aldar_core::experiments::component_names;
use aldar_core::forecast::{forecast_quantile, rolling_backtest};
use aldar_core::model::DEFAULT_BURN_IN;
use aldar_core::selection::select_order as run_select;
use aldar_core::stationarity::{margin, stationarity_boundary as boundary};
use aldar_core::{
    fit_qmle, fit_restricted, simulate as run_simulate, AldarError, FitOptions, FitResult, InnovationKind, InnovationSpec, ModelParams,
    ParamBounds, Regressors, SeriesSample,
};
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(aldar, ConvergenceError, PyRuntimeError, "The optimizer failed to converge.");

fn py_err(e: AldarError) -> PyErr {
    let msg = e.to_string();
    match e {
        AldarError::InvalidParams(_)
        | AldarError::InvalidArgument(_)
        | AldarError::FourthMomentViolation { .. }
        | AldarError::OutOfBounds(_)
        | AldarError::SeriesTooShort { .. }
        | AldarError::NonFinite(_) => PyValueError::new_err(msg),
        AldarError::NonConvergence(_) | AldarError::SelectionFailed | AldarError::OptimizerInconsistency { .. } => ConvergenceError::new_err(msg),
        _ => PyArithmeticError::new_err(msg),
    }
}

fn to_dict<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn innovation(s: &str) -> PyResult<InnovationSpec> {
    let kind: InnovationKind = s.parse().map_err(py_err)?;
    InnovationSpec::new(kind).map_err(py_err)
}

fn series(y: Vec<f64>) -> PyResult<SeriesSample> {
    SeriesSample::new(y, "y").map_err(py_err)
}

fn options(n_starts: usize, max_iter: usize, seed: u64) -> FitOptions {
    FitOptions { n_starts, max_iter, seed, ..FitOptions::default() }
}

fn psi_source(s: &str) -> PyResult<PsiSource> {
    match s {
        "restricted" => Ok(PsiSource::Restricted),
        "unrestricted" => Ok(PsiSource::Unrestricted),
        _ => Err(PyValueError::new_err(format!("psi must be 'restricted' or 'unrestricted', got '{s}'"))),
    }
}

fn matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Parameters `(alpha, omega, beta_plus, beta_minus)` of an order-p model.
#[pyclass(name = "ModelParams", module = "aldar", frozen)]
#[derive(Clone)]
pub struct PyModelParams {
    inner: ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    fn new(alpha: Vec<f64>, omega: f64, beta_plus: Vec<f64>, beta_minus: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: ModelParams::new(alpha, omega, beta_plus, beta_minus).map_err(py_err)? })
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha.clone()
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn beta_plus(&self) -> Vec<f64> {
        self.inner.beta_plus.clone()
    }

    #[getter]
    fn beta_minus(&self) -> Vec<f64> {
        self.inner.beta_minus.clone()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    /// Flattened `(alpha, omega, beta_plus, beta_minus)`.
    fn to_list(&self) -> Vec<f64> {
        self.inner.to_vec()
    }

    fn names(&self) -> Vec<String> {
        component_names(self.inner.order())
    }

    /// Sufficient-condition margin for a stationary solution with finite kappa-th moment; below 1 means stationary.
    #[pyo3(signature = (innovation = "normal", kappa = 1.0))]
    fn stationarity_margin(&self, innovation: &str, kappa: f64) -> PyResult<f64> {
        margin(&self.inner, &self::innovation(innovation)?, kappa).map_err(py_err)
    }

    #[pyo3(signature = (n, innovation = "normal", burn_in = DEFAULT_BURN_IN, seed = 0))]
    fn simulate(&self, py: Python<'_>, n: usize, innovation: &str, burn_in: usize, seed: u64) -> PyResult<Vec<f64>> {
        let spec = self::innovation(innovation)?;
        let s = py.allow_threads(|| run_simulate(&self.inner, &spec, n, burn_in, seed)).map_err(py_err)?;
        Ok(s.values)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("ModelParams(alpha={:?}, omega={}, beta_plus={:?}, beta_minus={:?})", p.alpha, p.omega, p.beta_plus, p.beta_minus)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// A quasi-maximum likelihood fit.
#[pyclass(name = "FitResult", module = "aldar", frozen)]
pub struct PyFitResult {
    inner: FitResult,
    reg: Regressors,
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn params(&self) -> PyModelParams {
        PyModelParams { inner: self.inner.theta_hat.clone() }
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        component_names(self.inner.order())
    }

    #[getter]
    fn estimates(&self) -> Vec<f64> {
        self.inner.theta_hat.to_vec()
    }

    /// Asymptotic standard deviations, in the order of `names`.
    #[getter]
    fn asd(&self) -> Vec<f64> {
        self.inner.asd.clone()
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.inner.loglik
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn pg_norm(&self) -> f64 {
        self.inner.pg_norm
    }

    #[getter]
    fn restricted(&self) -> bool {
        self.inner.restricted
    }

    #[getter]
    fn n_eff(&self) -> usize {
        self.inner.n_eff()
    }

    #[getter]
    fn sigma_hat(&self) -> Vec<Vec<f64>> {
        matrix(&self.inner.sigma_hat)
    }

    #[getter]
    fn omega_hat(&self) -> Vec<Vec<f64>> {
        matrix(&self.inner.omega_hat)
    }

    #[getter]
    fn xi_hat(&self) -> Vec<Vec<f64>> {
        matrix(&self.inner.xi_hat)
    }

    /// Mixed portmanteau test on the residuals with `m` lags.
    #[pyo3(signature = (m = 6))]
    fn portmanteau(&self, py: Python<'_>, m: usize) -> PyResult<PyObject> {
        let rep = run_portmanteau(&self.inner, &self.reg, m).map_err(py_err)?;
        to_dict(py, &rep)
    }

    /// One-step conditional quantile given the last p observations, most recent first.
    fn forecast_quantile(&self, recent: Vec<f64>, tau: f64) -> PyResult<f64> {
        forecast_quantile(&self.inner, &recent, tau).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(p={}, loglik={:.4}, converged={}, restricted={})",
            self.inner.order(),
            self.inner.loglik,
            self.inner.converged,
            self.inner.restricted
        )
    }
}

/// Simulates `n` observations after `burn_in` discarded ones.
#[pyfunction]
#[pyo3(signature = (params, n, innovation = "normal", burn_in = DEFAULT_BURN_IN, seed = 0))]
fn simulate(py: Python<'_>, params: &PyModelParams, n: usize, innovation: &str, burn_in: usize, seed: u64) -> PyResult<Vec<f64>> {
    params.simulate(py, n, innovation, burn_in, seed)
}

#[pyfunction]
#[pyo3(signature = (y, p, restricted = false, n_starts = 5, max_iter = 200, seed = FitOptions::default().seed))]
fn fit(py: Python<'_>, y: Vec<f64>, p: usize, restricted: bool, n_starts: usize, max_iter: usize, seed: u64) -> PyResult<PyFitResult> {
    let s = series(y)?;
    let opts = options(n_starts, max_iter, seed);
    let b = ParamBounds::default();
    let (inner, reg) = py
        .allow_threads(|| {
            let reg = Regressors::build(&s, p)?;
            let f = if restricted { fit_restricted(&s, p, &b, &opts)? } else { fit_qmle(&s, p, &b, &opts)? };
            Ok((f, reg))
        })
        .map_err(py_err)?;
    Ok(PyFitResult { inner, reg })
}

/// BIC order selection over `1..=p_max`.
#[pyfunction]
#[pyo3(signature = (y, p_max, n_starts = 5, seed = FitOptions::default().seed))]
fn select_order(py: Python<'_>, y: Vec<f64>, p_max: usize, n_starts: usize, seed: u64) -> PyResult<PyObject> {
    let s = series(y)?;
    let opts = options(n_starts, FitOptions::default().max_iter, seed);
    let rep = py.allow_threads(|| run_select(&s, p_max, &ParamBounds::default(), &opts)).map_err(py_err)?;
    to_dict(py, &rep)
}

/// Wald, LM and QLR tests of `beta_plus == beta_minus`.
#[pyfunction]
#[pyo3(signature = (y, p, psi = "restricted", n_starts = 5, seed = FitOptions::default().seed))]
fn asymmetry_tests(py: Python<'_>, y: Vec<f64>, p: usize, psi: &str, n_starts: usize, seed: u64) -> PyResult<PyObject> {
    let s = series(y)?;
    let source = psi_source(psi)?;
    let opts = options(n_starts, FitOptions::default().max_iter, seed);
    let rep = py.allow_threads(|| run_tests(&s, p, &ParamBounds::default(), &opts, source)).map_err(py_err)?;
    to_dict(py, &rep)
}

/// Fits order `p` and runs the portmanteau test for each lag count in `ms`.
#[pyfunction]
#[pyo3(signature = (y, p, ms = vec![6, 12, 18]))]
fn portmanteau(py: Python<'_>, y: Vec<f64>, p: usize, ms: Vec<usize>) -> PyResult<PyObject> {
    let f = fit(py, y, p, false, 5, 200, FitOptions::default().seed)?;
    let reps = ms.iter().map(|&m| run_portmanteau(&f.inner, &f.reg, m)).collect::<Result<Vec<_>, _>>().map_err(py_err)?;
    to_dict(py, &reps)
}

/// Rolling one-step VaR forecasts with coverage tests.
#[pyfunction]
#[pyo3(signature = (y, window, p, taus = vec![0.01, 0.05, 0.95, 0.99], refit_every = 1))]
fn backtest(py: Python<'_>, y: Vec<f64>, window: usize, p: usize, taus: Vec<f64>, refit_every: usize) -> PyResult<PyObject> {
    let s = series(y)?;
    let opts = FitOptions::default();
    let bt = py.allow_threads(|| rolling_backtest(&s, window, p, &taus, refit_every, &ParamBounds::default(), &opts)).map_err(py_err)?;
    let reports = bt.reports().map_err(py_err)?;
    #[derive(Serialize)]
    struct Out<'a> {
        reports: &'a [aldar_core::BacktestReport],
        gaps: &'a [usize],
        refits: usize,
        forecasts: &'a [aldar_core::VarForecastSeries],
    }
    to_dict(py, &Out { reports: &reports, gaps: &bt.gaps, refits: bt.refits, forecasts: &bt.forecasts })
}

/// Order-one stationarity boundary `beta_minus(alpha)` with `beta_plus = d * beta_minus`.
#[pyfunction]
#[pyo3(signature = (alphas, kappa = 1.0, d = 1.0, innovation = "normal"))]
fn stationarity_boundary(py: Python<'_>, alphas: Vec<f64>, kappa: f64, d: f64, innovation: &str) -> PyResult<Vec<f64>> {
    let spec = self::innovation(innovation)?;
    py.allow_threads(|| boundary(&spec, kappa, d, &alphas)).map_err(py_err)
}

#[pymodule]
fn aldar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyFitResult>()?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(select_order, m)?)?;
    m.add_function(wrap_pyfunction!(asymmetry_tests, m)?)?;
    m.add_function(wrap_pyfunction!(portmanteau, m)?)?;
    m.add_function(wrap_pyfunction!(backtest, m)?)?;
    m.add_function(wrap_pyfunction!(stationarity_boundary, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn innovation_strings() {
        assert!(innovation("t:5").is_ok());
        assert!(psi_source("both").is_err());
    }
}
