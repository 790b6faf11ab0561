//! Synthetic-recovery, stability and calibration tests for the Bayesian
//! regressions.

mod support;

use cornercast::dcp::Family;
use cornercast::model::{
    fit_map, fit_mcmc, log_posterior, posterior_predictive, Coefficients, McmcConfig, ModelData,
    ModelSpec, N_BETA,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{gp_synthetic, true_beta, TRUE_THETA};

fn gp_spec() -> ModelSpec {
    ModelSpec::new(Family::GeomPoisson, false, 5.0).unwrap()
}

#[test]
fn map_recovers_synthetic_gp_coefficients() {
    let data = gp_synthetic(4000, 21);
    let fit = fit_map(&data, &gp_spec()).unwrap();
    let beta = true_beta();
    assert!(
        (fit.coefficients.beta[1] - beta[1]).abs() < 0.05,
        "beta1 {} vs true {}",
        fit.coefficients.beta[1],
        beta[1]
    );
    assert!((fit.coefficients.fixed_shape.unwrap() - TRUE_THETA).abs() < 0.02);
}

#[test]
fn map_log_posterior_dominates_truth() {
    let data = gp_synthetic(1500, 22);
    let spec = gp_spec();
    let fit = fit_map(&data, &spec).unwrap();
    let truth = Coefficients {
        beta: true_beta().to_vec(),
        alpha: None,
        fixed_shape: Some(TRUE_THETA),
    };
    let lp_truth = log_posterior(&data, &truth, &spec).unwrap();
    assert!(
        fit.log_posterior >= lp_truth,
        "MAP lp {} below truth lp {}",
        fit.log_posterior,
        lp_truth
    );
}

#[test]
fn doubling_iterations_leaves_posterior_means_stable() {
    let data = gp_synthetic(500, 23);
    let spec = gp_spec();
    let short = fit_mcmc(&data, &spec, &McmcConfig::with_iterations(800, 11)).unwrap();
    let long = fit_mcmc(&data, &spec, &McmcConfig::with_iterations(1600, 12)).unwrap();
    let dim = spec.param_dim();
    for j in 0..dim {
        let mean = |d: &cornercast::model::PosteriorDraws| {
            d.draws.iter().map(|v| v[j]).sum::<f64>() / d.draws.len() as f64
        };
        let sd = |d: &cornercast::model::PosteriorDraws, m: f64| {
            (d.draws.iter().map(|v| (v[j] - m).powi(2)).sum::<f64>()
                / (d.draws.len() as f64 - 1.0))
                .sqrt()
        };
        let (m1, m2) = (mean(&short), mean(&long));
        let mcse1 = sd(&short, m1) / short.diagnostics.ess[j].sqrt();
        let mcse2 = sd(&long, m2) / long.diagnostics.ess[j].sqrt();
        let tol = 2.0 * (mcse1 * mcse1 + mcse2 * mcse2).sqrt();
        assert!(
            (m1 - m2).abs() <= tol.max(1e-4),
            "param {j}: {m1} vs {m2} beyond 2 joint MCSE {tol}"
        );
    }
}

#[test]
fn nb_on_constant_counts_diverges_with_warning() {
    // underdispersed data: the NB shape has no interior optimum, the
    // sampler pushes kappa toward the Poisson limit and flags convergence
    let spec = ModelSpec::new(Family::NegBinomial, false, 5.0).unwrap();
    let n = 200;
    let mut design = Vec::new();
    for _ in 0..n {
        let mut x = [0.0; N_BETA];
        x[0] = 1.0;
        design.push(x);
    }
    let data = ModelData::from_parts(design, vec![8u64; n], vec![0.0; n]).unwrap();
    let config = McmcConfig { chains: 4, iterations: 1000, warmup: 500, seed: 3, ..McmcConfig::default() };
    let draws = fit_mcmc(&data, &spec, &config).unwrap();
    let mut kappas: Vec<f64> = draws.draws.iter().map(|d| d[N_BETA].exp()).collect();
    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let kappa_median = kappas[kappas.len() / 2];
    assert!(kappa_median > 100.0, "kappa median {kappa_median} did not diverge");
    assert!(
        !draws.diagnostics.warnings.is_empty(),
        "expected a convergence warning on degenerate data"
    );
}

/// Randomized probability integral transform: under a calibrated predictive,
/// u = F(y-1) + U*p(y) is uniform, so u in [0.05, 0.95] with probability
/// 0.90 exactly even for discrete counts.
#[test]
fn predictive_interval_calibration_on_held_out_data() {
    let spec = gp_spec();
    let train = gp_synthetic(1000, 24);
    let config = McmcConfig::with_iterations(900, 13);
    let draws = fit_mcmc(&train, &spec, &config).unwrap();

    let test = gp_synthetic(2000, 25);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut hits = 0usize;
    for i in 0..test.len() {
        let row = cornercast::features::FeatureRow {
            log_tg: test.design[i][1],
            log_abs_sup: test.design[i][2],
            tc_target: test.design[i][3],
            log_home_avg3: test.design[i][4],
            log_away_avg3: test.design[i][5],
            log_home_sog3: test.design[i][6],
            log_away_sog3: test.design[i][7],
            shape_covariate: test.shape_cov[i],
        };
        let pmf = posterior_predictive(&draws, &row, 4).unwrap();
        let y = test.y[i] as usize;
        let cdf_below: f64 = pmf.iter().take(y).sum();
        let p_y = pmf.get(y).copied().unwrap_or(0.0);
        let u: f64 = cdf_below + rng.gen::<f64>() * p_y;
        if (0.05..=0.95).contains(&u) {
            hits += 1;
        }
    }
    let coverage = hits as f64 / test.len() as f64;
    assert!(
        (coverage - 0.9).abs() < 0.03,
        "randomized 90% coverage {coverage} outside 0.9 +/- 0.03"
    );
}

#[test]
fn mcmc_is_reproducible_per_seed() {
    let data = gp_synthetic(200, 26);
    let spec = gp_spec();
    let config = McmcConfig::with_iterations(600, 19);
    let a = fit_mcmc(&data, &spec, &config).unwrap();
    let b = fit_mcmc(&data, &spec, &config).unwrap();
    assert_eq!(a.draws, b.draws, "same seed must reproduce draws exactly");
    let other = fit_mcmc(&data, &spec, &McmcConfig::with_iterations(600, 20)).unwrap();
    assert_ne!(a.draws, other.draws);
}

#[test]
fn identical_models_differ_only_by_monte_carlo_noise_in_loo() {
    use cornercast::model::{elpd_diff, pointwise_loglik, psis_loo};
    let data = gp_synthetic(200, 27);
    let spec = gp_spec();
    let a = fit_mcmc(&data, &spec, &McmcConfig::with_iterations(1000, 21)).unwrap();
    let b = fit_mcmc(&data, &spec, &McmcConfig::with_iterations(1000, 22)).unwrap();
    let loo_a = psis_loo(&pointwise_loglik(&a, &data)).unwrap();
    let loo_b = psis_loo(&pointwise_loglik(&b, &data)).unwrap();
    let (diff, se_diff) = elpd_diff(&loo_a, &loo_b);
    assert!(
        diff.abs() <= 2.0 * se_diff.max(0.5),
        "same-model elpd difference {diff} exceeds 2 x MC noise {se_diff}"
    );
}

#[test]
fn posterior_medians_shrink_toward_truth_with_sample_size() {
    let spec = gp_spec();
    let beta = true_beta();
    let checked = [1usize, 4, 5];
    let mut errors: Vec<[f64; 3]> = Vec::new();
    for (idx, n) in [500usize, 2000, 8000].into_iter().enumerate() {
        let data = gp_synthetic(n, 31);
        let config = McmcConfig {
            chains: 2,
            iterations: 800,
            warmup: 400,
            seed: 40 + idx as u64,
            ..McmcConfig::default()
        };
        let draws = fit_mcmc(&data, &spec, &config).unwrap();
        let mut errs = [0.0; 3];
        for (slot, &j) in checked.iter().enumerate() {
            let mut col: Vec<f64> = draws.draws.iter().map(|d| d[j]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = col[col.len() / 2];
            errs[slot] = (median - beta[j]).abs();
        }
        errors.push(errs);
    }
    let mut monotone = 0;
    for slot in 0..3 {
        if errors[2][slot] < errors[1][slot] && errors[1][slot] < errors[0][slot] {
            monotone += 1;
        }
    }
    assert!(
        monotone >= 2,
        "expected monotone error shrinkage in >= 2 of 3 coefficients, got {monotone}: {errors:?}"
    );
}
