//! Discrete compound Poisson count distributions.
//!
//! A compound Poisson count is a Poisson number of clusters, each cluster
//! contributing an iid positive integer of events. Three members are
//! implemented: Poisson (degenerate clusters of size one), negative binomial
//! (logarithmic cluster sizes) and geometric-Poisson / Polya-Aeppli
//! (zero-truncated geometric cluster sizes). The family covers
//! variance-to-mean ratios >= 1, which is what clustered corner-kick counts
//! require.

use crate::numeric::{ln_binomial, ln_factorial};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson as PoissonSampler};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};
use thiserror::Error;

/// Truncation rule for cdf/support scans: accumulate mass until the survival
/// probability drops below this, with a hard cap on the support.
const SURVIVAL_TOL: f64 = 1e-12;
const SUPPORT_HARD_CAP: u64 = 500;

#[derive(Debug, Error)]
pub enum DcpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "dispersion condition violated for {family:?}: the shape parameter has a unique MLE \
         only when the sample variance exceeds the sample mean (s^2 > y-bar); got \
         s^2 = {variance:.6}, y-bar = {mean:.6}"
    )]
    DispersionCondition { family: Family, mean: f64, variance: f64 },
    #[error("empty sample")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Poisson,
    NegBinomial,
    GeomPoisson,
}

/// A parameterized member of the discrete compound Poisson family.
///
/// `lambda` is always the Poisson cluster-arrival rate. For the negative
/// binomial (mean `lambda`, shape `kappa`) the variance is
/// `lambda + lambda^2/kappa`; for the geometric-Poisson the mean is
/// `lambda/theta` and the variance `lambda(2-theta)/theta^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DcpDistribution {
    Poisson { lambda: f64 },
    NegBinomial { lambda: f64, kappa: f64 },
    GeomPoisson { lambda: f64, theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// Variance-to-mean ratio D; 1 for Poisson, > 1 otherwise.
    pub dispersion: f64,
}

impl DcpDistribution {
    pub fn poisson(lambda: f64) -> Result<Self, DcpError> {
        check_positive("lambda", lambda)?;
        Ok(Self::Poisson { lambda })
    }

    pub fn neg_binomial(lambda: f64, kappa: f64) -> Result<Self, DcpError> {
        check_positive("lambda", lambda)?;
        check_positive("kappa", kappa)?;
        Ok(Self::NegBinomial { lambda, kappa })
    }

    pub fn geom_poisson(lambda: f64, theta: f64) -> Result<Self, DcpError> {
        check_positive("lambda", lambda)?;
        if !(theta > 0.0 && theta < 1.0) {
            return Err(DcpError::InvalidParameter(format!(
                "theta must lie in (0, 1), got {theta}"
            )));
        }
        Ok(Self::GeomPoisson { lambda, theta })
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Poisson { .. } => Family::Poisson,
            Self::NegBinomial { .. } => Family::NegBinomial,
            Self::GeomPoisson { .. } => Family::GeomPoisson,
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Self::Poisson { lambda }
            | Self::NegBinomial { lambda, .. }
            | Self::GeomPoisson { lambda, .. } => lambda,
        }
    }

    /// Shape parameter (kappa or theta) when the family has one.
    pub fn shape(&self) -> Option<f64> {
        match *self {
            Self::Poisson { .. } => None,
            Self::NegBinomial { kappa, .. } => Some(kappa),
            Self::GeomPoisson { theta, .. } => Some(theta),
        }
    }

    /// Log probability mass at `y`.
    ///
    /// The geometric-Poisson inner sum over cluster counts k = 1..y is
    /// evaluated in log space (log-sum-exp with log-binomials from the
    /// cumulative log-factorial table); the direct product underflows for
    /// y beyond ~20.
    pub fn log_pmf(&self, y: u64) -> f64 {
        match *self {
            Self::Poisson { lambda } => y as f64 * lambda.ln() - lambda - ln_factorial(y),
            Self::NegBinomial { lambda, kappa } => {
                let yf = y as f64;
                ln_gamma(yf + kappa) - ln_gamma(kappa) - ln_factorial(y)
                    + yf * (lambda.ln() - (lambda + kappa).ln())
                    + kappa * (kappa.ln() - (lambda + kappa).ln())
            }
            Self::GeomPoisson { lambda, theta } => {
                if y == 0 {
                    return -lambda;
                }
                let (log_norm, _) = geom_poisson_sum_stats(lambda, theta, y);
                -lambda + log_norm
            }
        }
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.log_pmf(y).exp()
    }

    /// P(Y <= y).
    pub fn cdf(&self, y: u64) -> f64 {
        (0..=y).map(|j| self.pmf(j)).sum::<f64>().min(1.0)
    }

    /// Smallest y with survival below 1e-12, hard-capped at 500. Summing the
    /// pmf over `0..=support_cap()` therefore recovers the total mass to
    /// within the truncation tolerance.
    pub fn support_cap(&self) -> u64 {
        let mut cum = 0.0;
        for y in 0..=SUPPORT_HARD_CAP {
            cum += self.pmf(y);
            if 1.0 - cum < SURVIVAL_TOL {
                return y;
            }
        }
        SUPPORT_HARD_CAP
    }

    /// Probability generating function E[s^Y] for s in [0, 1].
    ///
    /// The geometric-Poisson form is derived from the zero-truncated
    /// geometric cluster pgf G_X(s) = theta*s / (1 - (1-theta)*s), the
    /// cluster law consistent with the mass function and with the moments
    /// E[Y] = lambda/theta, Var[Y] = lambda(2-theta)/theta^2.
    pub fn pgf(&self, s: f64) -> Result<f64, DcpError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(DcpError::Domain(format!("pgf argument must lie in [0, 1], got {s}")));
        }
        Ok(match *self {
            Self::Poisson { lambda } => (lambda * (s - 1.0)).exp(),
            Self::NegBinomial { lambda, kappa } => {
                (kappa / (lambda * (1.0 - s) + kappa)).powf(kappa)
            }
            Self::GeomPoisson { lambda, theta } => {
                let cluster = theta * s / (1.0 - (1.0 - theta) * s);
                (lambda * (cluster - 1.0)).exp()
            }
        })
    }

    /// Closed-form mean, variance and variance-to-mean ratio.
    pub fn moments(&self) -> MomentSummary {
        match *self {
            Self::Poisson { lambda } => {
                MomentSummary { mean: lambda, variance: lambda, dispersion: 1.0 }
            }
            Self::NegBinomial { lambda, kappa } => MomentSummary {
                mean: lambda,
                variance: lambda + lambda * lambda / kappa,
                dispersion: 1.0 + lambda / kappa,
            },
            Self::GeomPoisson { lambda, theta } => MomentSummary {
                mean: lambda / theta,
                variance: lambda * (2.0 - theta) / (theta * theta),
                dispersion: (2.0 - theta) / theta,
            },
        }
    }

    /// Draw `n` values by the compound construction: a Poisson number of
    /// clusters, each contributing an iid cluster size (degenerate 1,
    /// logarithmic, or zero-truncated geometric). Deterministic per seed.
    ///
    /// The negative binomial composition uses p = lambda/(lambda+kappa) and
    /// cluster rate kappa*ln(1 + lambda/kappa): with logarithmic(p) clusters
    /// the compound pgf exp{rate*(G_X(s)-1)} collapses to
    /// ((1-p)/(1-p*s))^kappa, the Gelman-parameterized NB pgf.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        match *self {
            Self::Poisson { lambda } => {
                let pois = PoissonSampler::new(lambda).expect("validated lambda");
                for _ in 0..n {
                    out.push(pois.sample(&mut rng) as u64);
                }
            }
            Self::NegBinomial { lambda, kappa } => {
                let p = lambda / (lambda + kappa);
                let rate = kappa * (1.0 + lambda / kappa).ln();
                let pois = PoissonSampler::new(rate).expect("positive rate");
                for _ in 0..n {
                    let clusters = pois.sample(&mut rng) as u64;
                    let mut y = 0u64;
                    for _ in 0..clusters {
                        y += sample_logarithmic(&mut rng, p);
                    }
                    out.push(y);
                }
            }
            Self::GeomPoisson { lambda, theta } => {
                let pois = PoissonSampler::new(lambda).expect("validated lambda");
                for _ in 0..n {
                    let clusters = pois.sample(&mut rng) as u64;
                    let mut y = 0u64;
                    for _ in 0..clusters {
                        y += sample_zero_truncated_geometric(&mut rng, theta);
                    }
                    out.push(y);
                }
            }
        }
        out
    }

    /// Gradient of `log_pmf` with respect to (lambda, shape). The shape slot
    /// is kappa for the negative binomial, theta for the geometric-Poisson,
    /// and 0 for Poisson.
    pub fn log_pmf_grad(&self, y: u64) -> (f64, f64) {
        match *self {
            Self::Poisson { lambda } => (y as f64 / lambda - 1.0, 0.0),
            Self::NegBinomial { lambda, kappa } => {
                let yf = y as f64;
                let d_lambda = yf / lambda - (yf + kappa) / (lambda + kappa);
                let d_kappa = digamma(yf + kappa) - digamma(kappa) + kappa.ln() + 1.0
                    - (lambda + kappa).ln()
                    - (yf + kappa) / (lambda + kappa);
                (d_lambda, d_kappa)
            }
            Self::GeomPoisson { lambda, theta } => {
                if y == 0 {
                    return (-1.0, 0.0);
                }
                // e_k is the conditional mean of the cluster count given y
                let (_, e_k) = geom_poisson_sum_stats(lambda, theta, y);
                let d_lambda = e_k / lambda - 1.0;
                let d_theta = e_k / theta - (y as f64 - e_k) / (1.0 - theta);
                (d_lambda, d_theta)
            }
        }
    }
}

/// Log-sum-exp and the k-weighted mean of the geometric-Poisson inner sum
/// over cluster counts k = 1..y, where term k is
/// lambda^k/k! * C(y-1, k-1) * theta^k * (1-theta)^(y-k).
/// Single pass with a running max, no allocation: this sits in the
/// sampler's hot path.
fn geom_poisson_sum_stats(lambda: f64, theta: f64, y: u64) -> (f64, f64) {
    let ln_lambda_theta = lambda.ln() + theta.ln();
    let one_m_theta = 1.0 - theta;
    let ln_1m_theta = if one_m_theta > 0.0 { one_m_theta.ln() } else { f64::NEG_INFINITY };
    let mut max_t = f64::NEG_INFINITY;
    let mut sum = 0.0f64;
    let mut k_sum = 0.0f64;
    for k in 1..=y {
        let tail = if k == y { 0.0 } else { (y - k) as f64 * ln_1m_theta };
        let t = k as f64 * ln_lambda_theta - ln_factorial(k) + ln_binomial(y - 1, k - 1) + tail;
        let kf = k as f64;
        if t <= max_t {
            let w = (t - max_t).exp();
            sum += w;
            k_sum += kf * w;
        } else {
            let rescale = if max_t == f64::NEG_INFINITY { 0.0 } else { (max_t - t).exp() };
            sum = sum * rescale + 1.0;
            k_sum = k_sum * rescale + kf;
            max_t = t;
        }
    }
    if max_t == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, 1.0);
    }
    (max_t + sum.ln(), k_sum / sum)
}

fn check_positive(name: &str, v: f64) -> Result<(), DcpError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(DcpError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Logarithmic(p) sampler by sequential cdf inversion:
/// P(X=x) = -p^x / (x * ln(1-p)), x >= 1.
fn sample_logarithmic<R: Rng>(rng: &mut R, p: f64) -> u64 {
    let u: f64 = rng.gen();
    let mut x = 1u64;
    let mut pmf = -p / (1.0 - p).ln();
    let mut cum = pmf;
    while u > cum && x < 10_000_000 {
        pmf *= p * x as f64 / (x + 1) as f64;
        x += 1;
        cum += pmf;
    }
    x
}

/// Zero-truncated geometric with success probability `theta`:
/// P(X=x) = theta * (1-theta)^(x-1), x >= 1; inversion sampling.
fn sample_zero_truncated_geometric<R: Rng>(rng: &mut R, theta: f64) -> u64 {
    let u: f64 = rng.gen();
    // 1 - u in (0, 1], so the log is finite and <= 0
    1 + ((1.0 - u).ln() / (1.0 - theta).ln()).floor() as u64
}

/// Cluster-size distribution for the generic compound construction. Weight
/// `weights[i]` is the probability of a cluster of size i+1.
#[derive(Debug, Clone)]
pub struct ClusterLaw {
    weights: Vec<f64>,
}

impl ClusterLaw {
    pub fn new(weights: Vec<f64>) -> Result<Self, DcpError> {
        if weights.is_empty() {
            return Err(DcpError::InvalidParameter("cluster law needs >= 1 weight".into()));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(DcpError::InvalidParameter("cluster weights must be >= 0".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DcpError::InvalidParameter(format!(
                "cluster weights must sum to 1, got {sum}"
            )));
        }
        let weights = weights.iter().map(|w| w / sum).collect();
        Ok(Self { weights })
    }

    /// Degenerate law: every cluster has size one (the Poisson case).
    pub fn degenerate_unit() -> Self {
        Self { weights: vec![1.0] }
    }

    /// Truncated logarithmic(p) law, renormalized over 1..=max_size.
    pub fn logarithmic(p: f64, max_size: usize) -> Result<Self, DcpError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DcpError::InvalidParameter(format!("p must lie in (0,1), got {p}")));
        }
        let raw: Vec<f64> = (1..=max_size).map(|x| p.powi(x as i32) / x as f64).collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self { weights: raw.into_iter().map(|w| w / sum).collect() })
    }

    /// Truncated zero-truncated-geometric(theta) law over 1..=max_size.
    pub fn zero_truncated_geometric(theta: f64, max_size: usize) -> Result<Self, DcpError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(DcpError::InvalidParameter(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        let raw: Vec<f64> =
            (1..=max_size).map(|x| theta * (1.0 - theta).powi(x as i32 - 1)).collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self { weights: raw.into_iter().map(|w| w / sum).collect() })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cluster-size pgf: sum over i of alpha_i s^i (sizes start at 1).
    pub fn pgf(&self, s: f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, a)| a * s.powi(i as i32 + 1)).sum()
    }

    /// Compound-Poisson pgf exp{ sum_i alpha_i lambda (s^i - 1) }.
    pub fn compound_pgf(&self, lambda: f64, s: f64) -> f64 {
        (lambda * (self.pgf(s) - 1.0)).exp()
    }

    fn sample_one<R: Rng>(&self, rng: &mut R) -> u64 {
        if self.weights.len() == 1 {
            // degenerate law consumes no randomness
            return 1;
        }
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            cum += w;
            if u <= cum {
                return i as u64 + 1;
            }
        }
        self.weights.len() as u64
    }

    /// Generic compound sampler: Poisson(lambda) clusters of iid sizes drawn
    /// from this law.
    pub fn sample_compound(&self, lambda: f64, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pois = PoissonSampler::new(lambda).expect("positive lambda");
        (0..n)
            .map(|_| {
                let clusters = pois.sample(&mut rng) as u64;
                (0..clusters).map(|_| self.sample_one(&mut rng)).sum()
            })
            .collect()
    }
}

/// Maximum-likelihood fit. The mean parameter is moment-matched at every
/// step of a one-dimensional profile search over the shape parameter
/// (golden section: theta on (1e-4, 1-1e-4), kappa on a log-scale bracket
/// [1e-2, 1e6]). The shape MLE exists uniquely only for overdispersed
/// samples, so s^2 > y-bar is required for NB and GP.
pub fn fit_mle(family: Family, data: &[u64]) -> Result<DcpDistribution, DcpError> {
    if data.is_empty() {
        return Err(DcpError::EmptySample);
    }
    let n = data.len() as f64;
    let mean = data.iter().map(|&y| y as f64).sum::<f64>() / n;
    if family == Family::Poisson {
        return DcpDistribution::poisson(mean);
    }
    let variance = if data.len() < 2 {
        0.0
    } else {
        data.iter().map(|&y| (y as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    if variance <= mean {
        return Err(DcpError::DispersionCondition { family, mean, variance });
    }
    let dispersion = variance / mean;
    let loglik = |dist: &DcpDistribution| data.iter().map(|&y| dist.log_pmf(y)).sum::<f64>();
    match family {
        Family::Poisson => unreachable!(),
        Family::NegBinomial => {
            // D = 1 + lambda/kappa at the moment-matched start
            let kappa0 = (mean / (dispersion - 1.0)).clamp(1e-2, 1e6);
            let profile = |t: f64| {
                let dist = DcpDistribution::NegBinomial { lambda: mean, kappa: t.exp() };
                -loglik(&dist)
            };
            let (t_opt, neg_ll) = golden_section_profile(profile, (1e-2f64).ln(), (1e6f64).ln());
            let start = DcpDistribution::NegBinomial { lambda: mean, kappa: kappa0 };
            let cand = DcpDistribution::NegBinomial { lambda: mean, kappa: t_opt.exp() };
            Ok(if -neg_ll >= loglik(&start) { cand } else { start })
        }
        Family::GeomPoisson => {
            // D = (2 - theta)/theta at the moment-matched start
            let theta0 = (2.0 / (dispersion + 1.0)).clamp(1e-4, 1.0 - 1e-4);
            let profile = |theta: f64| {
                let dist = DcpDistribution::GeomPoisson { lambda: theta * mean, theta };
                -loglik(&dist)
            };
            let (theta_opt, neg_ll) = golden_section_profile(profile, 1e-4, 1.0 - 1e-4);
            let start = DcpDistribution::GeomPoisson { lambda: theta0 * mean, theta: theta0 };
            let cand = DcpDistribution::GeomPoisson { lambda: theta_opt * mean, theta: theta_opt };
            Ok(if -neg_ll >= loglik(&start) { cand } else { start })
        }
    }
}

fn golden_section_profile<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    crate::optim::golden_section_min(f, a, b, 1e-10 * (b - a).abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gp_log_pmf_at_zero_is_minus_lambda() {
        let d = DcpDistribution::geom_poisson(2.0, 0.5).unwrap();
        assert_eq!(d.log_pmf(0), -2.0);
    }

    #[test]
    fn gp_log_pmf_single_term_sum() {
        // y = 1 has only the k = 1 term: lambda * theta * e^{-lambda}
        let d = DcpDistribution::geom_poisson(3.0, 0.7).unwrap();
        let expect = (3.0f64 * 0.7).ln() - 3.0;
        assert!((d.log_pmf(1) - expect).abs() < 1e-12);
    }

    #[test]
    fn nb_large_kappa_approaches_poisson() {
        let nb = DcpDistribution::neg_binomial(4.0, 1e6).unwrap();
        let pois = DcpDistribution::poisson(4.0).unwrap();
        assert!((nb.log_pmf(3) - pois.log_pmf(3)).abs() < 1e-6);
    }

    #[test]
    fn gp_log_pmf_no_underflow_for_large_counts() {
        let d = DcpDistribution::geom_poisson(30.0, 0.5).unwrap();
        let lp = d.log_pmf(60);
        assert!(lp.is_finite() && lp < 0.0);
        assert!(d.log_pmf(200).is_finite());
    }

    #[test]
    fn pgf_trivial_points() {
        let pois = DcpDistribution::poisson(3.3).unwrap();
        assert!((pois.pgf(1.0).unwrap() - 1.0).abs() < 1e-12);

        let gp = DcpDistribution::geom_poisson(2.0, 0.5).unwrap();
        assert!((gp.pgf(0.0).unwrap() - (-2.0f64).exp()).abs() < 1e-12);
        assert!((gp.pgf(0.0).unwrap() - gp.pmf(0)).abs() < 1e-12);

        let nb = DcpDistribution::neg_binomial(4.0, 2.0).unwrap();
        assert!((nb.pgf(0.5).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pgf_rejects_out_of_domain() {
        let d = DcpDistribution::poisson(1.0).unwrap();
        assert!(matches!(d.pgf(1.5), Err(DcpError::Domain(_))));
        assert!(matches!(d.pgf(-0.1), Err(DcpError::Domain(_))));
    }

    #[test]
    fn moments_closed_forms() {
        let gp = DcpDistribution::geom_poisson(1.0, 0.9577).unwrap();
        assert!((gp.moments().dispersion - 1.0883).abs() < 5e-5);

        let nb = DcpDistribution::neg_binomial(6.0, 3.0).unwrap();
        let m = nb.moments();
        assert!((m.variance - 18.0).abs() < 1e-12);
        assert!((m.dispersion - 3.0).abs() < 1e-12);

        let gp2 = DcpDistribution::geom_poisson(2.0, 0.5).unwrap();
        let m2 = gp2.moments();
        assert!((m2.mean - 4.0).abs() < 1e-12);
        assert!((m2.variance - 12.0).abs() < 1e-12);
        assert!((m2.dispersion - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_trivial_points() {
        let pois = DcpDistribution::poisson(1.0).unwrap();
        assert!((pois.cdf(0) - (-1.0f64).exp()).abs() < 1e-12);
        let gp = DcpDistribution::geom_poisson(5.0, 0.4).unwrap();
        assert!((gp.cdf(400) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = DcpDistribution::geom_poisson(5.0, 0.4).unwrap();
        assert_eq!(d.sample(50, 7), d.sample(50, 7));
        assert_ne!(d.sample(50, 7), d.sample(50, 8));
    }

    #[test]
    fn poisson_family_draws_equal_cluster_counts() {
        // degenerate unit clusters: compound draw == Poisson draw
        let d = DcpDistribution::poisson(4.0).unwrap();
        let generic = ClusterLaw::degenerate_unit().sample_compound(4.0, 200, 3);
        let direct = d.sample(200, 3);
        assert_eq!(generic, direct);
    }

    #[test]
    fn fit_mle_poisson_is_sample_mean() {
        let data = [3u64, 5, 4, 7, 1];
        let fit = fit_mle(Family::Poisson, &data).unwrap();
        assert!((fit.lambda() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fit_mle_rejects_underdispersed() {
        let constant = [4u64; 25];
        let err = fit_mle(Family::NegBinomial, &constant).unwrap_err();
        assert!(matches!(err, DcpError::DispersionCondition { .. }));
        assert!(err.to_string().contains("s^2 > y-bar"));
        assert!(fit_mle(Family::GeomPoisson, &constant).is_err());
        assert!(matches!(fit_mle(Family::Poisson, &[]), Err(DcpError::EmptySample)));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DcpDistribution::poisson(0.0).is_err());
        assert!(DcpDistribution::poisson(f64::NAN).is_err());
        assert!(DcpDistribution::neg_binomial(1.0, -2.0).is_err());
        assert!(DcpDistribution::geom_poisson(1.0, 1.0).is_err());
        assert!(DcpDistribution::geom_poisson(1.0, 0.0).is_err());
    }

    #[test]
    fn cluster_law_validation() {
        assert!(ClusterLaw::new(vec![]).is_err());
        assert!(ClusterLaw::new(vec![0.5, 0.4]).is_err());
        assert!(ClusterLaw::new(vec![0.5, -0.5, 1.0]).is_err());
        let law = ClusterLaw::new(vec![0.25, 0.75]).unwrap();
        assert!((law.pgf(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_pmf_grad_matches_finite_differences() {
        let cases: Vec<(DcpDistribution, u64)> = vec![
            (DcpDistribution::poisson(3.0).unwrap(), 5),
            (DcpDistribution::neg_binomial(4.0, 2.5).unwrap(), 7),
            (DcpDistribution::geom_poisson(5.0, 0.4).unwrap(), 9),
            (DcpDistribution::geom_poisson(9.0, 0.9577).unwrap(), 0),
            (DcpDistribution::geom_poisson(9.0, 0.9577).unwrap(), 14),
        ];
        for (dist, y) in cases {
            let (d_lambda, d_shape) = dist.log_pmf_grad(y);
            let h = 1e-6;
            let bump_lambda = |dl: f64| match dist {
                DcpDistribution::Poisson { lambda } => {
                    DcpDistribution::Poisson { lambda: lambda + dl }
                }
                DcpDistribution::NegBinomial { lambda, kappa } => {
                    DcpDistribution::NegBinomial { lambda: lambda + dl, kappa }
                }
                DcpDistribution::GeomPoisson { lambda, theta } => {
                    DcpDistribution::GeomPoisson { lambda: lambda + dl, theta }
                }
            };
            let fd_lambda = (bump_lambda(h).log_pmf(y) - bump_lambda(-h).log_pmf(y)) / (2.0 * h);
            assert!(
                (d_lambda - fd_lambda).abs() < 1e-5 * (1.0 + fd_lambda.abs()),
                "lambda grad mismatch for {dist:?} y={y}: {d_lambda} vs {fd_lambda}"
            );
            let bump_shape = |ds: f64| match dist {
                DcpDistribution::Poisson { lambda } => DcpDistribution::Poisson { lambda },
                DcpDistribution::NegBinomial { lambda, kappa } => {
                    DcpDistribution::NegBinomial { lambda, kappa: kappa + ds }
                }
                DcpDistribution::GeomPoisson { lambda, theta } => {
                    DcpDistribution::GeomPoisson { lambda, theta: theta + ds }
                }
            };
            let fd_shape = (bump_shape(h).log_pmf(y) - bump_shape(-h).log_pmf(y)) / (2.0 * h);
            assert!(
                (d_shape - fd_shape).abs() < 1e-5 * (1.0 + fd_shape.abs()),
                "shape grad mismatch for {dist:?} y={y}: {d_shape} vs {fd_shape}"
            );
        }
    }
}
