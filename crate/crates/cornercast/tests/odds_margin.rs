//! Bisection-oracle and property tests for the margin-removal methods.

use cornercast::odds::{
    multiplicative, neg_log_score, odds_ratio, power, remove_margin, shin, MarginMethod, OddsBook,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn book(odds: &[f64]) -> OddsBook {
    OddsBook::new(odds.to_vec()).unwrap()
}

/// Plain bisection on a monotone objective; independent of the production
/// Brent solver.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo.signum() != f(hi).signum(), "oracle bracket invalid");
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn odds_ratio_matches_bisection_oracle() {
    let b = book(&[1.5, 4.5, 6.0]);
    let or_probs = |or: f64| -> Vec<f64> {
        b.inverse().iter().map(|pi| pi / (or + pi - or * pi)).collect()
    };
    let or_star = bisect(|or| or_probs(or).iter().sum::<f64>() - 1.0, 1e-6, 1e6, 200);
    let oracle: Vec<f64> = {
        let raw = or_probs(or_star);
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|p| p / sum).collect()
    };
    let got = odds_ratio(&b).unwrap();
    for (g, o) in got.probs.iter().zip(&oracle) {
        assert!((g - o).abs() < 1e-10, "{g} vs oracle {o}");
    }
}

fn shin_probs_at(b: &OddsBook, z: f64) -> Vec<f64> {
    let pi = b.booksum();
    b.inverse()
        .iter()
        .map(|pi_i| ((z * z + 4.0 * (1.0 - z) * pi_i * pi_i / pi).sqrt() - z) / (2.0 * (1.0 - z)))
        .collect()
}

#[test]
fn shin_three_outcomes_matches_bisection_on_z() {
    let b = book(&[1.5, 4.5, 6.0]);
    let z_star = bisect(|z| shin_probs_at(&b, z).iter().sum::<f64>() - 1.0, 0.0, 0.2, 200);
    let oracle: Vec<f64> = {
        let raw = shin_probs_at(&b, z_star);
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|p| p / sum).collect()
    };
    let got = shin(&b).unwrap();
    for (g, o) in got.probs.iter().zip(&oracle) {
        assert!((g - o).abs() < 1e-8, "{g} vs oracle {o}");
    }
}

#[test]
fn shin_two_outcome_closed_form_agrees_with_bisection() {
    for odds in [[1.85, 1.95], [1.5, 2.8], [1.3, 3.9]] {
        let b = book(&odds);
        // closed-form path inside shin(); oracle solves the sum equation on z
        let z_star = bisect(|z| shin_probs_at(&b, z).iter().sum::<f64>() - 1.0, 0.0, 0.2, 200);
        let oracle: Vec<f64> = {
            let raw = shin_probs_at(&b, z_star);
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|p| p / sum).collect()
        };
        let got = shin(&b).unwrap();
        for (g, o) in got.probs.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-8, "odds {odds:?}: {g} vs oracle {o}");
        }
    }
}

#[test]
fn power_matches_bisection_oracle() {
    let b = book(&[1.5, 4.5, 6.0]);
    let u_star = bisect(
        |u| b.inverse().iter().map(|pi| pi.powf(u)).sum::<f64>() - 1.0,
        0.1,
        10.0,
        200,
    );
    let got = power(&b).unwrap();
    for (g, pi) in got.probs.iter().zip(b.inverse()) {
        assert!((g - pi.powf(u_star)).abs() < 1e-10);
    }
}

/// 20 books with booksum > 1 and max/min odds ratio >= 5: every
/// longshot-discounting method assigns the longshot less probability than
/// proportional normalization does.
#[test]
fn longshot_discount_holds_on_book_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 20 {
        let p_fav = rng.gen_range(0.55..0.85);
        let margin = rng.gen_range(1.02..1.12);
        let n_outcomes = if checked % 2 == 0 { 2 } else { 3 };
        let mut probs = vec![p_fav];
        match n_outcomes {
            2 => probs.push(1.0 - p_fav),
            _ => {
                let rest = 1.0 - p_fav;
                let split = rng.gen_range(0.55..0.75);
                probs.push(rest * split);
                probs.push(rest * (1.0 - split));
            }
        }
        let odds: Vec<f64> = probs.iter().map(|p| 1.0 / (p * margin)).collect();
        let max = odds.iter().cloned().fold(f64::MIN, f64::max);
        let min = odds.iter().cloned().fold(f64::MAX, f64::min);
        if max / min < 5.0 {
            continue;
        }
        let b = OddsBook::new(odds).unwrap();
        assert!(b.booksum() > 1.0);
        let longshot = b
            .inverse()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let mult = multiplicative(&b);
        for method in [MarginMethod::OddsRatio, MarginMethod::Shin, MarginMethod::Power] {
            let p = remove_margin(&b, method).unwrap();
            assert!(
                p.probs[longshot] < mult.probs[longshot],
                "book {:?} {method:?}: longshot {} !< multiplicative {}",
                b.odds(),
                p.probs[longshot],
                mult.probs[longshot]
            );
        }
        checked += 1;
    }
}

/// Propriety of the log score: the true generating probabilities score
/// strictly better (lower) than perturbed ones on a large synthetic set.
#[test]
fn log_score_prefers_true_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 1000;
    let mut probs_true = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n {
        let p: f64 = rng.gen_range(0.2..0.8);
        let truth = vec![p, 1.0 - p];
        let u: f64 = rng.gen();
        outcomes.push(if u < p { 0 } else { 1 });
        probs_true.push(truth);
    }
    let score_true = neg_log_score(&probs_true, &outcomes).unwrap();
    for delta in [-0.1f64, -0.05, 0.05, 0.1] {
        let perturbed: Vec<Vec<f64>> = probs_true
            .iter()
            .map(|p| {
                let q = (p[0] + delta).clamp(0.01, 0.99);
                vec![q, 1.0 - q]
            })
            .collect();
        let score_perturbed = neg_log_score(&perturbed, &outcomes).unwrap();
        assert!(
            score_true < score_perturbed,
            "delta {delta}: true {score_true} !< perturbed {score_perturbed}"
        );
    }
}
