//! Bayesian compound Poisson count regressions.
//!
//! Five candidate models share one linear predictor for the log cluster
//! rate: Poisson, negative binomial and geometric-Poisson with a fixed shape
//! parameter, plus NB and GP variants whose shape parameter is regressed on
//! the goal-supremacy covariate. Priors are independent Normal(0,
//! prior_scale^2) on every unconstrained parameter.
//!
//! The linear predictor models log lambda — the Poisson cluster rate — for
//! every family. For the geometric-Poisson this means the distribution mean
//! is exp(x'beta)/theta, not exp(x'beta); coefficients are interpreted on
//! the cluster-rate scale.

pub mod loo;
pub mod mcmc;

pub use loo::{elpd_diff, psis_loo, LooResult};
pub use mcmc::{fit_mcmc, McmcConfig};

use crate::data::CoefficientSummary;
use crate::dcp::{DcpDistribution, Family};
use crate::features::FeatureRow;
use crate::numeric::{logistic, logit, quantile_sorted};
use crate::optim::{minimize_bounded, Bounds, MinimizeOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Location coefficients: intercept plus seven covariates.
pub const N_BETA: usize = 8;

/// Default draw thinning for the posterior predictive.
pub const DEFAULT_PREDICTIVE_THINNING: usize = 4;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub shape_regression: bool,
    pub prior_scale: f64,
}

impl ModelSpec {
    pub fn new(family: Family, shape_regression: bool, prior_scale: f64) -> Result<Self, ModelError> {
        if shape_regression && family == Family::Poisson {
            return Err(ModelError::InvalidSpec(
                "the Poisson family has no shape parameter to regress".into(),
            ));
        }
        if !(prior_scale > 0.0 && prior_scale.is_finite()) {
            return Err(ModelError::InvalidSpec(format!(
                "prior_scale must be positive, got {prior_scale}"
            )));
        }
        Ok(Self { family, shape_regression, prior_scale })
    }

    /// Number of unconstrained parameters.
    pub fn param_dim(&self) -> usize {
        match (self.family, self.shape_regression) {
            (Family::Poisson, _) => N_BETA,
            (_, false) => N_BETA + 1,
            (_, true) => N_BETA + 2,
        }
    }

    /// Unconstrained-parameter names, in vector order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..N_BETA).map(|j| format!("beta{j}")).collect();
        match (self.family, self.shape_regression) {
            (Family::Poisson, _) => {}
            (Family::NegBinomial, false) => names.push("log_kappa".into()),
            (Family::GeomPoisson, false) => names.push("logit_theta".into()),
            (_, true) => {
                names.push("alpha0".into());
                names.push("alpha1".into());
            }
        }
        names
    }

    /// Natural-scale names for reporting (kappa/theta instead of their
    /// unconstrained transforms).
    pub fn natural_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..N_BETA).map(|j| format!("beta{j}")).collect();
        match (self.family, self.shape_regression) {
            (Family::Poisson, _) => {}
            (Family::NegBinomial, false) => names.push("kappa".into()),
            (Family::GeomPoisson, false) => names.push("theta".into()),
            (_, true) => {
                names.push("alpha0".into());
                names.push("alpha1".into());
            }
        }
        names
    }
}

/// Regression coefficients on their natural scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub beta: Vec<f64>,
    /// Shape-regression intercept and slope, when the spec has them.
    pub alpha: Option<[f64; 2]>,
    /// Fixed kappa or theta, when the spec fixes the shape.
    pub fixed_shape: Option<f64>,
}

impl Coefficients {
    pub fn zeros(spec: &ModelSpec) -> Self {
        Self::from_unconstrained(spec, &vec![0.0; spec.param_dim()])
            .expect("zero vector always valid")
    }

    pub fn to_unconstrained(&self, spec: &ModelSpec) -> Result<Vec<f64>, ModelError> {
        if self.beta.len() != N_BETA {
            return Err(ModelError::Dimension(format!(
                "expected {N_BETA} beta coefficients, got {}",
                self.beta.len()
            )));
        }
        let mut params = self.beta.clone();
        match (spec.family, spec.shape_regression) {
            (Family::Poisson, _) => {}
            (family, false) => {
                let shape = self.fixed_shape.ok_or_else(|| {
                    ModelError::Dimension("fixed_shape required for this spec".into())
                })?;
                match family {
                    Family::NegBinomial => {
                        if shape <= 0.0 {
                            return Err(ModelError::InvalidSpec(format!(
                                "kappa must be positive, got {shape}"
                            )));
                        }
                        params.push(shape.ln());
                    }
                    Family::GeomPoisson => {
                        if !(shape > 0.0 && shape < 1.0) {
                            return Err(ModelError::InvalidSpec(format!(
                                "theta must lie in (0,1), got {shape}"
                            )));
                        }
                        params.push(logit(shape));
                    }
                    Family::Poisson => unreachable!(),
                }
            }
            (_, true) => {
                let alpha = self.alpha.ok_or_else(|| {
                    ModelError::Dimension("alpha required for a shape regression".into())
                })?;
                params.extend_from_slice(&alpha);
            }
        }
        Ok(params)
    }

    pub fn from_unconstrained(spec: &ModelSpec, params: &[f64]) -> Result<Self, ModelError> {
        if params.len() != spec.param_dim() {
            return Err(ModelError::Dimension(format!(
                "expected {} parameters, got {}",
                spec.param_dim(),
                params.len()
            )));
        }
        let beta = params[..N_BETA].to_vec();
        let (alpha, fixed_shape) = match (spec.family, spec.shape_regression) {
            (Family::Poisson, _) => (None, None),
            (Family::NegBinomial, false) => (None, Some(params[N_BETA].exp())),
            (Family::GeomPoisson, false) => (None, Some(logistic(params[N_BETA]))),
            (_, true) => (Some([params[N_BETA], params[N_BETA + 1]]), None),
        };
        Ok(Self { beta, alpha, fixed_shape })
    }
}

/// Design matrix, response counts and the shape-regression covariate.
#[derive(Debug, Clone)]
pub struct ModelData {
    pub design: Vec<[f64; N_BETA]>,
    pub y: Vec<u64>,
    pub shape_cov: Vec<f64>,
}

impl ModelData {
    pub fn new(rows: &[FeatureRow], counts: &[u64]) -> Result<Self, ModelError> {
        if rows.len() != counts.len() {
            return Err(ModelError::Dimension(format!(
                "{} feature rows vs {} counts",
                rows.len(),
                counts.len()
            )));
        }
        if rows.is_empty() {
            return Err(ModelError::Data("empty data".into()));
        }
        Ok(Self {
            design: rows.iter().map(|r| r.design()).collect(),
            y: counts.to_vec(),
            shape_cov: rows.iter().map(|r| r.shape_covariate).collect(),
        })
    }

    /// Assemble from raw parts (synthetic-data and test paths).
    pub fn from_parts(
        design: Vec<[f64; N_BETA]>,
        y: Vec<u64>,
        shape_cov: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if design.len() != y.len() || design.len() != shape_cov.len() {
            return Err(ModelError::Dimension("design/y/shape_cov lengths differ".into()));
        }
        if design.is_empty() {
            return Err(ModelError::Data("empty data".into()));
        }
        Ok(Self { design, y, shape_cov })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn linear_predictor(x: &[f64; N_BETA], params: &[f64]) -> f64 {
    let mut eta = 0.0;
    for j in 0..N_BETA {
        eta += x[j] * params[j];
    }
    eta
}

/// Per-observation distribution at an unconstrained parameter vector.
/// Returns None when the predictor or shape link is numerically unusable.
fn obs_distribution(
    spec: &ModelSpec,
    params: &[f64],
    x: &[f64; N_BETA],
    shape_cov: f64,
) -> Option<DcpDistribution> {
    let eta = linear_predictor(x, params);
    let lambda = eta.exp();
    if !(lambda.is_finite() && lambda > 0.0) {
        return None;
    }
    match (spec.family, spec.shape_regression) {
        (Family::Poisson, _) => Some(DcpDistribution::Poisson { lambda }),
        (Family::NegBinomial, false) => {
            let kappa = params[N_BETA].exp();
            kappa.is_finite().then_some(DcpDistribution::NegBinomial { lambda, kappa })
        }
        (Family::NegBinomial, true) => {
            let kappa = (params[N_BETA] + params[N_BETA + 1] * shape_cov).exp();
            kappa.is_finite().then_some(DcpDistribution::NegBinomial { lambda, kappa })
        }
        (Family::GeomPoisson, false) => {
            let theta = logistic(params[N_BETA]);
            (theta > 0.0 && theta < 1.0)
                .then_some(DcpDistribution::GeomPoisson { lambda, theta })
        }
        (Family::GeomPoisson, true) => {
            let theta = logistic(params[N_BETA] + params[N_BETA + 1] * shape_cov);
            (theta > 0.0 && theta < 1.0)
                .then_some(DcpDistribution::GeomPoisson { lambda, theta })
        }
    }
}

/// Sum of per-observation log pmfs at an unconstrained parameter vector;
/// -inf when any observation is numerically unusable.
pub fn log_likelihood_unconstrained(data: &ModelData, spec: &ModelSpec, params: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        match obs_distribution(spec, params, &data.design[i], data.shape_cov[i]) {
            Some(dist) => total += dist.log_pmf(data.y[i]),
            None => return f64::NEG_INFINITY,
        }
    }
    total
}

/// Log likelihood at natural-scale coefficients.
pub fn log_likelihood(
    data: &ModelData,
    coef: &Coefficients,
    spec: &ModelSpec,
) -> Result<f64, ModelError> {
    let params = coef.to_unconstrained(spec)?;
    let ll = log_likelihood_unconstrained(data, spec, &params);
    if !ll.is_finite() {
        return Err(ModelError::Data(
            "non-finite linear predictor or log likelihood".into(),
        ));
    }
    Ok(ll)
}

fn log_prior(spec: &ModelSpec, params: &[f64]) -> f64 {
    let s2 = spec.prior_scale * spec.prior_scale;
    let norm = -0.5 * (2.0 * std::f64::consts::PI * s2).ln();
    params.iter().map(|p| norm - p * p / (2.0 * s2)).sum()
}

/// Log posterior at an unconstrained vector: log likelihood plus independent
/// Normal(0, prior_scale^2) log densities on every parameter (the fixed
/// log kappa / logit theta included).
pub fn log_posterior_unconstrained(data: &ModelData, spec: &ModelSpec, params: &[f64]) -> f64 {
    let ll = log_likelihood_unconstrained(data, spec, params);
    if !ll.is_finite() {
        return f64::NEG_INFINITY;
    }
    ll + log_prior(spec, params)
}

pub fn log_posterior(
    data: &ModelData,
    coef: &Coefficients,
    spec: &ModelSpec,
) -> Result<f64, ModelError> {
    let params = coef.to_unconstrained(spec)?;
    let lp = log_posterior_unconstrained(data, spec, &params);
    if !lp.is_finite() {
        return Err(ModelError::Data("non-finite log posterior".into()));
    }
    Ok(lp)
}

/// Log posterior and its analytic gradient in the unconstrained space.
/// The value is -inf (gradient zeros) outside the numerically usable region.
pub fn log_posterior_grad(
    data: &ModelData,
    spec: &ModelSpec,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let dim = spec.param_dim();
    let mut grad = vec![0.0; dim];
    let mut total = 0.0;
    for i in 0..data.len() {
        let dist = match obs_distribution(spec, params, &data.design[i], data.shape_cov[i]) {
            Some(d) => d,
            None => return (f64::NEG_INFINITY, vec![0.0; dim]),
        };
        let y = data.y[i];
        total += dist.log_pmf(y);
        let (d_lambda, d_shape) = dist.log_pmf_grad(y);
        // d eta / d beta_j = x_ij and lambda = exp(eta)
        let dl_deta = d_lambda * dist.lambda();
        for j in 0..N_BETA {
            grad[j] += dl_deta * data.design[i][j];
        }
        match (spec.family, spec.shape_regression) {
            (Family::Poisson, _) => {}
            (Family::NegBinomial, false) => {
                let kappa = dist.shape().unwrap();
                grad[N_BETA] += d_shape * kappa;
            }
            (Family::NegBinomial, true) => {
                let kappa = dist.shape().unwrap();
                let d_link = d_shape * kappa;
                grad[N_BETA] += d_link;
                grad[N_BETA + 1] += d_link * data.shape_cov[i];
            }
            (Family::GeomPoisson, false) => {
                let theta = dist.shape().unwrap();
                grad[N_BETA] += d_shape * theta * (1.0 - theta);
            }
            (Family::GeomPoisson, true) => {
                let theta = dist.shape().unwrap();
                let d_link = d_shape * theta * (1.0 - theta);
                grad[N_BETA] += d_link;
                grad[N_BETA + 1] += d_link * data.shape_cov[i];
            }
        }
    }
    if !total.is_finite() {
        return (f64::NEG_INFINITY, vec![0.0; dim]);
    }
    let s2 = spec.prior_scale * spec.prior_scale;
    for (g, p) in grad.iter_mut().zip(params) {
        *g -= p / s2;
    }
    (total + log_prior(spec, params), grad)
}

#[derive(Debug, Clone)]
pub struct MapFit {
    pub coefficients: Coefficients,
    /// Unconstrained parameter vector at the optimum.
    pub params: Vec<f64>,
    pub log_posterior: f64,
    pub converged: bool,
}

/// Posterior mode by quasi-Newton ascent from the zero vector.
pub fn fit_map(data: &ModelData, spec: &ModelSpec) -> Result<MapFit, ModelError> {
    if data.is_empty() {
        return Err(ModelError::Data("empty data".into()));
    }
    let dim = spec.param_dim();
    let objective = |p: &[f64]| {
        let (lp, mut g) = log_posterior_grad(data, spec, p);
        for gi in &mut g {
            *gi = -*gi;
        }
        (if lp.is_finite() { -lp } else { 1e300 }, g)
    };
    let result = minimize_bounded(
        objective,
        &vec![0.0; dim],
        &Bounds::unbounded(dim),
        &MinimizeOptions { max_iter: 600, grad_tol: 1e-7, f_tol: 1e-14 },
    );
    let lp = -result.value;
    let zero_lp = log_posterior_unconstrained(data, spec, &vec![0.0; dim]);
    let (params, lp) = if lp >= zero_lp {
        (result.x.clone(), lp)
    } else {
        // never return something worse than the start
        (vec![0.0; dim], zero_lp)
    };
    Ok(MapFit {
        coefficients: Coefficients::from_unconstrained(spec, &params)?,
        params,
        log_posterior: lp,
        converged: result.converged,
    })
}

/// Posterior draws with chain labels and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    /// Kept draws in the unconstrained space, chain-major order.
    pub draws: Vec<Vec<f64>>,
    pub chain_ids: Vec<usize>,
    pub n_chains: usize,
    pub kept_per_chain: usize,
    pub spec: ModelSpec,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub param_names: Vec<String>,
    pub rhat: Vec<f64>,
    pub ess: Vec<f64>,
    pub divergences: usize,
    pub mean_accept: f64,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    pub fn coefficients(&self, draw: usize) -> Coefficients {
        Coefficients::from_unconstrained(&self.spec, &self.draws[draw])
            .expect("stored draws match the spec")
    }

    /// Median and central 95% interval per parameter, on natural scales
    /// (kappa/theta back-transformed).
    pub fn summaries(&self) -> Vec<CoefficientSummary> {
        let names = self.spec.natural_names();
        let dim = self.spec.param_dim();
        let fixed_shape = !self.spec.shape_regression && self.spec.family != Family::Poisson;
        (0..dim)
            .map(|j| {
                let mut col: Vec<f64> = self
                    .draws
                    .iter()
                    .map(|d| {
                        if j == N_BETA && fixed_shape {
                            match self.spec.family {
                                Family::NegBinomial => d[j].exp(),
                                Family::GeomPoisson => logistic(d[j]),
                                Family::Poisson => unreachable!(),
                            }
                        } else {
                            d[j]
                        }
                    })
                    .collect();
                col.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
                CoefficientSummary {
                    name: names[j].clone(),
                    median: quantile_sorted(&col, 0.5),
                    lower95: quantile_sorted(&col, 0.025),
                    upper95: quantile_sorted(&col, 0.975),
                }
            })
            .collect()
    }
}

/// Per-draw, per-observation log likelihood matrix (draws x observations).
pub fn pointwise_loglik(draws: &PosteriorDraws, data: &ModelData) -> Vec<Vec<f64>> {
    draws
        .draws
        .iter()
        .map(|params| {
            (0..data.len())
                .map(|i| {
                    obs_distribution(&draws.spec, params, &data.design[i], data.shape_cov[i])
                        .map(|d| d.log_pmf(data.y[i]))
                        .unwrap_or(f64::NEG_INFINITY)
                })
                .collect()
        })
        .collect()
}

/// Mixture of per-draw pmfs over a thinned draw subset (every `thinning`-th
/// draw, starting at the first). The support cap is the largest per-draw
/// truncation point, so the result sums to 1 within the truncation
/// tolerance.
pub fn posterior_predictive(
    draws: &PosteriorDraws,
    row: &FeatureRow,
    thinning: usize,
) -> Result<Vec<f64>, ModelError> {
    let thinning = thinning.max(1);
    let design = row.design();
    let selected: Vec<&Vec<f64>> = draws.draws.iter().step_by(thinning).collect();
    let dists: Vec<DcpDistribution> = selected
        .iter()
        .map(|params| {
            obs_distribution(&draws.spec, params, &design, row.shape_covariate)
                .ok_or_else(|| ModelError::Data("non-finite predictor in predictive".into()))
        })
        .collect::<Result<_, _>>()?;
    Ok(mixture_pmf(&dists))
}

/// Predictive pmf from a single coefficient vector (the MAP path).
pub fn predictive_from_coefficients(
    coef: &Coefficients,
    spec: &ModelSpec,
    row: &FeatureRow,
) -> Result<Vec<f64>, ModelError> {
    let params = coef.to_unconstrained(spec)?;
    let dist = obs_distribution(spec, &params, &row.design(), row.shape_covariate)
        .ok_or_else(|| ModelError::Data("non-finite predictor in predictive".into()))?;
    Ok(mixture_pmf(&[dist]))
}

fn mixture_pmf(dists: &[DcpDistribution]) -> Vec<f64> {
    let cap = dists.iter().map(|d| d.support_cap()).max().unwrap_or(0) as usize;
    let mut pmf = vec![0.0; cap + 1];
    for dist in dists {
        for (y, slot) in pmf.iter_mut().enumerate() {
            *slot += dist.pmf(y as u64);
        }
    }
    let k = dists.len() as f64;
    for slot in &mut pmf {
        *slot /= k;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gp_spec() -> ModelSpec {
        ModelSpec::new(Family::GeomPoisson, false, 5.0).unwrap()
    }

    fn toy_data(n: usize, seed: u64) -> ModelData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut design = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut shape_cov = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = [0.0; N_BETA];
            x[0] = 1.0;
            for slot in x.iter_mut().skip(1) {
                *slot = rng.gen_range(-1.0..1.0);
            }
            design.push(x);
            shape_cov.push(x[2]);
            y.push((i % 7) as u64 + 2);
        }
        ModelData::from_parts(design, y, shape_cov).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new(Family::Poisson, true, 5.0).is_err());
        assert!(ModelSpec::new(Family::Poisson, false, 0.0).is_err());
        assert_eq!(ModelSpec::new(Family::Poisson, false, 5.0).unwrap().param_dim(), 8);
        assert_eq!(gp_spec().param_dim(), 9);
        assert_eq!(ModelSpec::new(Family::NegBinomial, true, 5.0).unwrap().param_dim(), 10);
    }

    #[test]
    fn poisson_single_row_loglik_is_poisson_logpmf() {
        let spec = ModelSpec::new(Family::Poisson, false, 5.0).unwrap();
        let mut beta = vec![0.0; N_BETA];
        beta[0] = 10f64.ln();
        let coef = Coefficients { beta, alpha: None, fixed_shape: None };
        let mut x = [0.0; N_BETA];
        x[0] = 1.0;
        let data = ModelData::from_parts(vec![x], vec![10], vec![0.0]).unwrap();
        let ll = log_likelihood(&data, &coef, &spec).unwrap();
        let expect = DcpDistribution::poisson(10.0).unwrap().log_pmf(10);
        assert!((ll - expect).abs() < 1e-12);
    }

    #[test]
    fn loglik_invariant_to_row_permutation() {
        let spec = gp_spec();
        let data = toy_data(40, 1);
        let coef = Coefficients {
            beta: vec![1.2, 0.2, -0.1, 0.05, 0.3, 0.3, -0.02, 0.01],
            alpha: None,
            fixed_shape: Some(0.8),
        };
        let ll = log_likelihood(&data, &coef, &spec).unwrap();
        let mut perm_design = data.design.clone();
        let mut perm_y = data.y.clone();
        let mut perm_cov = data.shape_cov.clone();
        perm_design.reverse();
        perm_y.reverse();
        perm_cov.reverse();
        let permuted = ModelData::from_parts(perm_design, perm_y, perm_cov).unwrap();
        let ll_perm = log_likelihood(&permuted, &coef, &spec).unwrap();
        assert!((ll - ll_perm).abs() < 1e-9);
    }

    #[test]
    fn shape_regression_with_zero_slope_collapses_to_fixed_shape() {
        let data = toy_data(30, 2);
        let theta_star = 0.85;
        let fixed = gp_spec();
        let reg = ModelSpec::new(Family::GeomPoisson, true, 5.0).unwrap();
        let beta = vec![1.0, 0.1, -0.05, 0.2, 0.4, 0.4, 0.0, -0.1];
        let coef_fixed =
            Coefficients { beta: beta.clone(), alpha: None, fixed_shape: Some(theta_star) };
        let coef_reg =
            Coefficients { beta, alpha: Some([logit(theta_star), 0.0]), fixed_shape: None };
        let ll_fixed = log_likelihood(&data, &coef_fixed, &fixed).unwrap();
        let ll_reg = log_likelihood(&data, &coef_reg, &reg).unwrap();
        assert!((ll_fixed - ll_reg).abs() < 1e-10);
    }

    #[test]
    fn flat_prior_limit_recovers_likelihood_shape() {
        let data = toy_data(25, 3);
        let spec_tight = gp_spec();
        let spec_flat = ModelSpec::new(Family::GeomPoisson, false, 1e8).unwrap();
        let coef_a = Coefficients {
            beta: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            alpha: None,
            fixed_shape: Some(0.7),
        };
        let coef_b = Coefficients {
            beta: vec![1.3, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            alpha: None,
            fixed_shape: Some(0.7),
        };
        // with an essentially flat prior, posterior differences equal
        // likelihood differences
        let diff_post = log_posterior(&data, &coef_a, &spec_flat).unwrap()
            - log_posterior(&data, &coef_b, &spec_flat).unwrap();
        let diff_lik = log_likelihood(&data, &coef_a, &spec_tight).unwrap()
            - log_likelihood(&data, &coef_b, &spec_tight).unwrap();
        assert!((diff_post - diff_lik).abs() < 1e-6);
    }

    #[test]
    fn zero_coefficients_posterior_is_loglik_plus_prior_norm() {
        let data = toy_data(10, 4);
        let spec = gp_spec();
        let coef = Coefficients::zeros(&spec);
        let lp = log_posterior(&data, &coef, &spec).unwrap();
        let ll = log_likelihood(&data, &coef, &spec).unwrap();
        let s2 = 25.0;
        let norm = -0.5 * (2.0 * std::f64::consts::PI * s2).ln();
        assert!((lp - ll - 9.0 * norm).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences_at_random_points() {
        for (family, shape_reg) in [
            (Family::Poisson, false),
            (Family::NegBinomial, false),
            (Family::GeomPoisson, false),
            (Family::NegBinomial, true),
            (Family::GeomPoisson, true),
        ] {
            let spec = ModelSpec::new(family, shape_reg, 5.0).unwrap();
            let data = toy_data(20, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            for _ in 0..10 {
                let params: Vec<f64> =
                    (0..spec.param_dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let (_, grad) = log_posterior_grad(&data, &spec, &params);
                let numeric = crate::optim::numeric_grad(
                    |p| log_posterior_unconstrained(&data, &spec, p),
                    &params,
                );
                for (g, n) in grad.iter().zip(&numeric) {
                    assert!(
                        (g - n).abs() <= 1e-5 * (1.0 + n.abs()),
                        "{family:?} shape_reg={shape_reg}: analytic {g} vs numeric {n}"
                    );
                }
            }
        }
    }

    #[test]
    fn map_poisson_intercept_only_is_log_mean() {
        let spec = ModelSpec::new(Family::Poisson, false, 5.0).unwrap();
        let n = 60;
        let mut design = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let mut x = [0.0; N_BETA];
            x[0] = 1.0;
            design.push(x);
            y.push(if i % 2 == 0 { 10 } else { 9 });
        }
        let data = ModelData::from_parts(design, y.clone(), vec![0.0; n]).unwrap();
        let fit = fit_map(&data, &spec).unwrap();
        let ybar = y.iter().sum::<u64>() as f64 / n as f64;
        assert!(
            (fit.coefficients.beta[0] - ybar.ln()).abs() < 1e-3,
            "beta0 {} vs log mean {}",
            fit.coefficients.beta[0],
            ybar.ln()
        );
        let zero_lp =
            log_posterior_unconstrained(&data, &spec, &vec![0.0; spec.param_dim()]);
        assert!(fit.log_posterior >= zero_lp);
    }

    #[test]
    fn predictive_single_draw_equals_that_draws_pmf() {
        let spec = gp_spec();
        let params = {
            let coef = Coefficients {
                beta: vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                alpha: None,
                fixed_shape: Some(0.9),
            };
            coef.to_unconstrained(&spec).unwrap()
        };
        let draws = PosteriorDraws {
            draws: vec![params],
            chain_ids: vec![0],
            n_chains: 1,
            kept_per_chain: 1,
            spec,
            diagnostics: Diagnostics {
                param_names: spec.param_names(),
                rhat: vec![],
                ess: vec![],
                divergences: 0,
                mean_accept: 1.0,
                warnings: vec![],
            },
        };
        let row = FeatureRow {
            log_tg: 0.0,
            log_abs_sup: 0.0,
            tc_target: 0.0,
            log_home_avg3: 0.0,
            log_away_avg3: 0.0,
            log_home_sog3: 0.0,
            log_away_sog3: 0.0,
            shape_covariate: 0.0,
        };
        let pmf = posterior_predictive(&draws, &row, 4).unwrap();
        let dist = DcpDistribution::geom_poisson(2f64.exp(), 0.9).unwrap();
        for (y, p) in pmf.iter().enumerate() {
            assert!((p - dist.pmf(y as u64)).abs() < 1e-12);
        }
        let total: f64 = pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pointwise_matrix_shape_and_row_sums() {
        let spec = gp_spec();
        let data = toy_data(12, 6);
        let coef = Coefficients {
            beta: vec![1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            alpha: None,
            fixed_shape: Some(0.8),
        };
        let params = coef.to_unconstrained(&spec).unwrap();
        let draws = PosteriorDraws {
            draws: vec![params.clone(), params],
            chain_ids: vec![0, 0],
            n_chains: 1,
            kept_per_chain: 2,
            spec,
            diagnostics: Diagnostics {
                param_names: spec.param_names(),
                rhat: vec![],
                ess: vec![],
                divergences: 0,
                mean_accept: 1.0,
                warnings: vec![],
            },
        };
        let matrix = pointwise_loglik(&draws, &data);
        assert_eq!(matrix.len(), 2);
        assert_eq!(matrix[0].len(), 12);
        // constant-draw matrix: both rows identical
        assert_eq!(matrix[0], matrix[1]);
        let ll = log_likelihood(&data, &draws.coefficients(0), &draws.spec).unwrap();
        let row_sum: f64 = matrix[0].iter().sum();
        assert!((row_sum - ll).abs() < 1e-9);
    }
}
