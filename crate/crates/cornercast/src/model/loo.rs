//! Pareto-smoothed importance-sampling leave-one-out cross validation.
//!
//! Importance weights per observation are the reciprocal likelihoods. The
//! largest 20% of weights are replaced by quantiles of a generalized Pareto
//! distribution fitted to them by probability-weighted moments; the fitted
//! tail index k is reported per observation (k below 0.5 indicates a
//! reliable estimate, above 0.7 an unreliable one).

use super::ModelError;
use crate::numeric::log_sum_exp;

pub const PARETO_K_GOOD: f64 = 0.5;
pub const PARETO_K_BAD: f64 = 0.7;
const MIN_DRAWS: usize = 1000;
const MIN_TAIL: usize = 5;

/// Leave-one-out expected log pointwise predictive density and diagnostics.
#[derive(Debug, Clone)]
pub struct LooResult {
    pub elpd_loo: f64,
    /// Effective number of parameters: sum of (lpd_i - elpd_loo_i).
    pub p_loo: f64,
    /// Standard error of elpd_loo.
    pub se_elpd: f64,
    pub pointwise: Vec<f64>,
    pub pareto_k: Vec<f64>,
    /// Standard error of the elpd difference to a reference model; filled
    /// by comparisons, zero/None for a standalone result.
    pub se_diff: Option<f64>,
}

/// Compute PSIS-LOO from a (draws x observations) log-likelihood matrix.
pub fn psis_loo(loglik: &[Vec<f64>]) -> Result<LooResult, ModelError> {
    let s = loglik.len();
    if s < MIN_DRAWS {
        return Err(ModelError::Data(format!(
            "psis_loo needs at least {MIN_DRAWS} draws, got {s}"
        )));
    }
    let n = loglik[0].len();
    if n == 0 || loglik.iter().any(|row| row.len() != n) {
        return Err(ModelError::Dimension("ragged log-likelihood matrix".into()));
    }
    let mut pointwise = Vec::with_capacity(n);
    let mut pareto_k = Vec::with_capacity(n);
    let mut p_loo = 0.0;
    let ln_s = (s as f64).ln();
    let mut col = vec![0.0f64; s];
    for i in 0..n {
        for (sidx, row) in loglik.iter().enumerate() {
            col[sidx] = row[i];
        }
        let (log_weights, k) = smoothed_log_weights(&col);
        pareto_k.push(k);
        // elpd_i = log( sum w * p / sum w )
        let joint: Vec<f64> =
            log_weights.iter().zip(&col).map(|(lw, ll)| lw + ll).collect();
        let elpd_i = log_sum_exp(&joint) - log_sum_exp(&log_weights);
        let lpd_i = log_sum_exp(&col) - ln_s;
        pointwise.push(elpd_i);
        p_loo += lpd_i - elpd_i;
    }
    let elpd_loo: f64 = pointwise.iter().sum();
    let mean = elpd_loo / n as f64;
    let var =
        pointwise.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se_elpd = (n as f64 * var).sqrt();
    Ok(LooResult { elpd_loo, p_loo, se_elpd, pointwise, pareto_k, se_diff: None })
}

/// Pointwise elpd difference (a - b) and its standard error.
pub fn elpd_diff(a: &LooResult, b: &LooResult) -> (f64, f64) {
    assert_eq!(
        a.pointwise.len(),
        b.pointwise.len(),
        "models must share the observation set"
    );
    let n = a.pointwise.len() as f64;
    let diffs: Vec<f64> =
        a.pointwise.iter().zip(&b.pointwise).map(|(x, y)| x - y).collect();
    let total: f64 = diffs.iter().sum();
    let mean = total / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    (total, (n * var).sqrt())
}

/// Smoothed log importance weights for one observation plus the fitted
/// Pareto tail index. Weights are the reciprocal likelihoods; the top 20%
/// are replaced by GPD quantiles and capped at the raw maximum.
fn smoothed_log_weights(loglik_col: &[f64]) -> (Vec<f64>, f64) {
    let s = loglik_col.len();
    let mut log_w: Vec<f64> = loglik_col.iter().map(|ll| -ll).collect();
    let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // order of weights ascending
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| log_w[a].partial_cmp(&log_w[b]).expect("finite weights"));
    let tail_len = ((s as f64) * 0.2).ceil() as usize;
    if tail_len < MIN_TAIL || tail_len >= s {
        return (log_w, f64::INFINITY);
    }
    // threshold: largest weight not in the tail (on the shifted ratio scale)
    let cut = log_w[order[s - tail_len - 1]] - max_lw;
    let threshold = cut.exp();
    let exceedances: Vec<f64> = order[s - tail_len..]
        .iter()
        .map(|&idx| (log_w[idx] - max_lw).exp() - threshold)
        .collect();
    let (sigma, k) = match gpd_fit_pwm(&exceedances) {
        Some(fit) => fit,
        None => return (log_w, f64::INFINITY),
    };
    // replace tail weights by GPD quantiles at (j - 1/2)/M, capped at the
    // raw maximum (which is 1 on the shifted scale)
    for (j, &idx) in order[s - tail_len..].iter().enumerate() {
        let p = (j as f64 + 0.5) / tail_len as f64;
        let q = threshold + gpd_quantile(p, sigma, k);
        log_w[idx] = q.min(1.0).max(f64::MIN_POSITIVE).ln() + max_lw;
    }
    (log_w, k)
}

/// Generalized Pareto fit by probability-weighted moments
/// (exceedances over zero, ascending order not required).
/// Returns (sigma, k) with cdf F(z) = 1 - (1 + k z / sigma)^(-1/k).
pub fn gpd_fit_pwm(z: &[f64]) -> Option<(f64, f64)> {
    let n = z.len();
    if n < 2 {
        return None;
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite exceedances"));
    let nf = n as f64;
    let b0: f64 = sorted.iter().sum::<f64>() / nf;
    if !(b0 > 0.0) {
        return None;
    }
    // b1 estimates E[Z (1 - F(Z))]
    let mut b1 = 0.0;
    for (j, zj) in sorted.iter().enumerate() {
        b1 += zj * (nf - 1.0 - j as f64) / (nf - 1.0);
    }
    b1 /= nf;
    let denom = b0 - 2.0 * b1;
    if denom.abs() < 1e-300 {
        return None;
    }
    let k = 2.0 - b0 / denom;
    let sigma = 2.0 * b0 * b1 / denom;
    if !(sigma > 0.0 && k.is_finite()) {
        return None;
    }
    Some((sigma, k))
}

/// Quantile of the generalized Pareto with scale sigma and shape k.
pub fn gpd_quantile(p: f64, sigma: f64, k: f64) -> f64 {
    if k.abs() < 1e-9 {
        -sigma * (1.0 - p).ln()
    } else {
        sigma / k * ((1.0 - p).powf(-k) - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gpd_sample(n: usize, sigma: f64, k: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen_range(1e-12..1.0);
                gpd_quantile(u, sigma, k)
            })
            .collect()
    }

    #[test]
    fn gpd_pwm_recovers_parameters() {
        for (sigma, k) in [(1.0, 0.2), (2.0, 0.4), (0.5, -0.1)] {
            let z = gpd_sample(20_000, sigma, k, 11);
            let (s_hat, k_hat) = gpd_fit_pwm(&z).unwrap();
            assert!((s_hat - sigma).abs() < 0.1 * sigma + 0.05, "sigma {s_hat} vs {sigma}");
            assert!((k_hat - k).abs() < 0.06, "k {k_hat} vs {k}");
        }
    }

    #[test]
    fn gpd_fit_rejects_degenerate_input() {
        assert!(gpd_fit_pwm(&[0.0, 0.0, 0.0]).is_none());
        assert!(gpd_fit_pwm(&[1.0]).is_none());
    }

    #[test]
    fn psis_rejects_thin_matrices() {
        let m = vec![vec![-1.0, -2.0]; 10];
        assert!(psis_loo(&m).is_err());
    }

    #[test]
    fn self_difference_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m: Vec<Vec<f64>> = (0..1200)
            .map(|_| (0..20).map(|_| -2.0 + rng.gen_range(-0.5..0.5)).collect())
            .collect();
        let a = psis_loo(&m).unwrap();
        let b = psis_loo(&m).unwrap();
        let (diff, se) = elpd_diff(&a, &b);
        assert_eq!(diff, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn constant_column_records_infinite_k_but_finite_elpd() {
        let m: Vec<Vec<f64>> = vec![vec![-2.5]; 1500];
        let r = psis_loo(&m).unwrap();
        assert!(r.pareto_k[0].is_infinite());
        assert!((r.elpd_loo - -2.5).abs() < 1e-12);
        assert!(r.p_loo.abs() < 1e-12);
    }

    #[test]
    fn pointwise_sums_to_elpd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m: Vec<Vec<f64>> = (0..1100)
            .map(|_| (0..15).map(|_| -2.0 + rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let r = psis_loo(&m).unwrap();
        let sum: f64 = r.pointwise.iter().sum();
        assert!((sum - r.elpd_loo).abs() < 1e-9);
        assert!(r.p_loo >= -1e-9);
    }
}
