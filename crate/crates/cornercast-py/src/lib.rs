//! Python bindings for the cornercast toolkit: the count distributions,
//! margin removal, implied-goals extraction, feature encoding, model
//! fitting and bet evaluation.

use cornercast::betting;
use cornercast::dcp::{self, DcpDistribution, Family};
use cornercast::features;
use cornercast::implied_goals::{self, MarketTargets};
use cornercast::model::{self, McmcConfig, ModelData, ModelSpec, N_BETA};
use cornercast::odds::{self, MarginMethod, OddsBook};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_family(name: &str) -> PyResult<Family> {
    match name.to_ascii_lowercase().as_str() {
        "poisson" => Ok(Family::Poisson),
        "nb" | "negbinomial" | "negative_binomial" => Ok(Family::NegBinomial),
        "gp" | "geompoisson" | "geometric_poisson" => Ok(Family::GeomPoisson),
        other => Err(PyValueError::new_err(format!(
            "unknown family '{other}' (expected poisson, nb or gp)"
        ))),
    }
}

/// A discrete compound Poisson count distribution (Poisson, negative
/// binomial or geometric-Poisson).
#[pyclass(name = "DcpDistribution")]
#[derive(Clone)]
struct PyDcpDistribution {
    inner: DcpDistribution,
}

#[pymethods]
impl PyDcpDistribution {
    #[staticmethod]
    fn poisson(lambda: f64) -> PyResult<Self> {
        Ok(Self { inner: DcpDistribution::poisson(lambda).map_err(value_err)? })
    }

    #[staticmethod]
    fn neg_binomial(lambda: f64, kappa: f64) -> PyResult<Self> {
        Ok(Self { inner: DcpDistribution::neg_binomial(lambda, kappa).map_err(value_err)? })
    }

    #[staticmethod]
    fn geom_poisson(lambda: f64, theta: f64) -> PyResult<Self> {
        Ok(Self { inner: DcpDistribution::geom_poisson(lambda, theta).map_err(value_err)? })
    }

    fn log_pmf(&self, y: u64) -> f64 {
        self.inner.log_pmf(y)
    }

    fn pmf(&self, y: u64) -> f64 {
        self.inner.pmf(y)
    }

    fn cdf(&self, y: u64) -> f64 {
        self.inner.cdf(y)
    }

    fn pgf(&self, s: f64) -> PyResult<f64> {
        self.inner.pgf(s).map_err(value_err)
    }

    /// (mean, variance, variance-to-mean ratio)
    fn moments(&self) -> (f64, f64, f64) {
        let m = self.inner.moments();
        (m.mean, m.variance, m.dispersion)
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        self.inner.sample(n, seed)
    }

    fn support_cap(&self) -> u64 {
        self.inner.support_cap()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Maximum-likelihood fit of a family to count data.
#[pyfunction]
fn fit_mle(family: &str, data: Vec<u64>) -> PyResult<PyDcpDistribution> {
    let fitted = dcp::fit_mle(parse_family(family)?, &data).map_err(value_err)?;
    Ok(PyDcpDistribution { inner: fitted })
}

fn parse_method(name: &str) -> PyResult<MarginMethod> {
    match name.to_ascii_lowercase().as_str() {
        "mult" | "multiplicative" => Ok(MarginMethod::Multiplicative),
        "or" | "odds_ratio" => Ok(MarginMethod::OddsRatio),
        "shin" => Ok(MarginMethod::Shin),
        "power" => Ok(MarginMethod::Power),
        other => Err(PyValueError::new_err(format!(
            "unknown method '{other}' (expected mult, or, shin or power)"
        ))),
    }
}

/// Margin-removed implied probabilities for a book of decimal odds.
/// Returns (probabilities, solver_residual).
#[pyfunction]
fn implied_probabilities(odds: Vec<f64>, method: &str) -> PyResult<(Vec<f64>, f64)> {
    let book = OddsBook::new(odds).map_err(value_err)?;
    let implied = odds::remove_margin(&book, parse_method(method)?).map_err(value_err)?;
    Ok((implied.probs, implied.solver_residual))
}

/// 1 / booksum for a book of decimal odds.
#[pyfunction]
fn payout_rate(odds: Vec<f64>) -> PyResult<f64> {
    Ok(odds::payout_rate(&OddsBook::new(odds).map_err(value_err)?))
}

/// Negative logarithmic score (positive total; lower is better).
#[pyfunction]
fn neg_log_score(probs: Vec<Vec<f64>>, outcomes: Vec<usize>) -> PyResult<f64> {
    odds::neg_log_score(&probs, &outcomes).map_err(value_err)
}

/// Implied total goals and supremacy from margin-removed HAD and O/U
/// probabilities. Returns (tg, sup, achieved_loss, at_bound).
#[pyfunction]
#[pyo3(signature = (p_home, p_draw, p_under, goals_line = 2.5))]
fn extract_implied_goals(
    p_home: f64,
    p_draw: f64,
    p_under: f64,
    goals_line: f64,
) -> PyResult<(f64, f64, f64, bool)> {
    let targets =
        MarketTargets::new(p_home, p_draw, p_under, goals_line).map_err(value_err)?;
    let fit = implied_goals::fit_implied(&targets).map_err(value_err)?;
    let ts = implied_goals::tg_sup(&fit.dp);
    Ok((ts.tg, ts.sup, fit.loss, fit.at_bound))
}

/// Shrinkage target encoding (n_k * theta_k + theta_global * m)/(n_k + m).
#[pyfunction]
fn target_encode(n_k: f64, theta_k: f64, theta_global: f64, m: f64) -> f64 {
    features::target_encode(n_k, theta_k, theta_global, m)
}

/// Split a predictive pmf at a line. Returns (p_over, p_under, p_push).
#[pyfunction]
fn over_under_probs(pmf: Vec<f64>, line: f64) -> (f64, f64, f64) {
    betting::over_under_probs(&pmf, line)
}

/// Expected value per unit stake of a bet with win probability p_win, push
/// probability p_push and decimal odds.
#[pyfunction]
fn expected_value(p_win: f64, p_push: f64, odds: f64) -> f64 {
    betting::expected_value(p_win, p_push, odds)
}

/// Annualized Sharpe ratio of a {date: profit} daily series; None when
/// fewer than two active days exist.
#[pyfunction]
#[pyo3(signature = (daily_profits, trade_days = 364.0))]
fn annualized_sharpe(daily_profits: BTreeMap<String, f64>, trade_days: f64) -> Option<f64> {
    betting::sharpe(&daily_profits, trade_days)
}

fn build_model_data(design: Vec<Vec<f64>>, counts: Vec<u64>) -> PyResult<ModelData> {
    if design.len() != counts.len() {
        return Err(PyValueError::new_err(format!(
            "{} design rows vs {} counts",
            design.len(),
            counts.len()
        )));
    }
    let mut rows = Vec::with_capacity(design.len());
    let mut shape_cov = Vec::with_capacity(design.len());
    for (i, row) in design.iter().enumerate() {
        if row.len() != N_BETA {
            return Err(PyValueError::new_err(format!(
                "design row {i} has {} entries, expected {N_BETA} \
                 (intercept + 7 covariates)",
                row.len()
            )));
        }
        let mut arr = [0.0; N_BETA];
        arr.copy_from_slice(row);
        shape_cov.push(arr[2]);
        rows.push(arr);
    }
    ModelData::from_parts(rows, counts, shape_cov).map_err(value_err)
}

/// Fit a compound Poisson count regression. `design` rows carry the
/// intercept plus seven covariates (the shape-regression covariate is
/// column 2). Returns a dict with coefficient summaries and, for MCMC,
/// R-hat/ESS diagnostics.
#[pyfunction]
#[pyo3(signature = (design, counts, family, shape_regression = false, method = "map",
                    chains = 4, iterations = 2000, seed = 0, prior_scale = 5.0))]
#[allow(clippy::too_many_arguments)]
fn fit_count_regression(
    py: Python<'_>,
    design: Vec<Vec<f64>>,
    counts: Vec<u64>,
    family: &str,
    shape_regression: bool,
    method: &str,
    chains: usize,
    iterations: usize,
    seed: u64,
    prior_scale: f64,
) -> PyResult<PyObject> {
    let spec = ModelSpec::new(parse_family(family)?, shape_regression, prior_scale)
        .map_err(value_err)?;
    let data = build_model_data(design, counts)?;
    let out = PyDict::new_bound(py);
    match method.to_ascii_lowercase().as_str() {
        "map" => {
            let fit = model::fit_map(&data, &spec).map_err(value_err)?;
            out.set_item("method", "map")?;
            out.set_item("beta", fit.coefficients.beta.clone())?;
            if let Some(shape) = fit.coefficients.fixed_shape {
                out.set_item("shape", shape)?;
            }
            if let Some(alpha) = fit.coefficients.alpha {
                out.set_item("alpha", alpha.to_vec())?;
            }
            out.set_item("log_posterior", fit.log_posterior)?;
            out.set_item("converged", fit.converged)?;
        }
        "mcmc" => {
            let config = McmcConfig {
                chains,
                iterations,
                warmup: iterations / 2,
                seed,
                ..McmcConfig::default()
            };
            let draws = model::fit_mcmc(&data, &spec, &config).map_err(value_err)?;
            out.set_item("method", "mcmc")?;
            let summaries: Vec<(String, f64, f64, f64)> = draws
                .summaries()
                .into_iter()
                .map(|s| (s.name, s.median, s.lower95, s.upper95))
                .collect();
            out.set_item("summaries", summaries)?;
            out.set_item("rhat", draws.diagnostics.rhat.clone())?;
            out.set_item("ess", draws.diagnostics.ess.clone())?;
            out.set_item("warnings", draws.diagnostics.warnings.clone())?;
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}' (expected map or mcmc)"
            )))
        }
    }
    Ok(out.into())
}

#[pymodule]
fn cornercast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDcpDistribution>()?;
    m.add_function(wrap_pyfunction!(fit_mle, m)?)?;
    m.add_function(wrap_pyfunction!(implied_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(payout_rate, m)?)?;
    m.add_function(wrap_pyfunction!(neg_log_score, m)?)?;
    m.add_function(wrap_pyfunction!(extract_implied_goals, m)?)?;
    m.add_function(wrap_pyfunction!(target_encode, m)?)?;
    m.add_function(wrap_pyfunction!(over_under_probs, m)?)?;
    m.add_function(wrap_pyfunction!(expected_value, m)?)?;
    m.add_function(wrap_pyfunction!(annualized_sharpe, m)?)?;
    m.add_function(wrap_pyfunction!(fit_count_regression, m)?)?;
    Ok(())
}
