//! Shared synthetic-data generators and oracles for integration tests.

#![allow(dead_code)]

pub mod oracle;

use cornercast::dcp::DcpDistribution;
use cornercast::model::{ModelData, N_BETA};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// True coefficients used by the synthetic geometric-Poisson studies:
/// cluster-rate scale sized so counts look like corner totals (mean ~ 9-10).
pub fn true_beta() -> [f64; N_BETA] {
    [2.2, 0.15, -0.05, -0.25, 0.35, 0.3, -0.1, 0.08]
}

pub const TRUE_THETA: f64 = 0.9577;

/// Correlated covariate design: each covariate shares a common factor, which
/// is what market covariates do in practice (implied goals, team histories
/// and league means co-move).
pub fn gp_design(n: usize, rng: &mut ChaCha8Rng) -> (Vec<[f64; N_BETA]>, Vec<f64>) {
    let rho = 0.5f64;
    let mut design = Vec::with_capacity(n);
    let mut shape_cov = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let mut x = [0.0; N_BETA];
        x[0] = 1.0;
        for slot in x.iter_mut().skip(1) {
            let e: f64 = rng.sample(StandardNormal);
            *slot = 0.4 * (rho * z + (1.0 - rho * rho).sqrt() * e);
        }
        shape_cov.push(x[2]);
        design.push(x);
    }
    (design, shape_cov)
}

/// Synthetic GP regression data with known coefficients.
pub fn gp_synthetic(n: usize, seed: u64) -> ModelData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (design, shape_cov) = gp_design(n, &mut rng);
    let beta = true_beta();
    let mut y = Vec::with_capacity(n);
    for (i, x) in design.iter().enumerate() {
        let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let dist = DcpDistribution::geom_poisson(eta.exp(), TRUE_THETA).unwrap();
        let draw_seed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(i as u64 + 1);
        y.push(dist.sample(1, draw_seed)[0]);
    }
    ModelData::from_parts(design, y, shape_cov).unwrap()
}
