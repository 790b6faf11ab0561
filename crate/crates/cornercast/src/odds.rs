//! Bookmaker odds, margin removal and forecast scoring.
//!
//! The inverse odds of a book sum to more than one; the excess is the
//! bookmaker margin. Four removal methods map the inverse odds to a proper
//! probability vector: proportional (multiplicative), odds-ratio, Shin's
//! insider-trading model and the power method. All but the multiplicative
//! method discount longshots, which is the favourite-longshot correction.

use crate::optim::{brent_root, OptimError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SUM_TOL: f64 = 1e-10;
const SHIN_STEP_TOL: f64 = 1e-12;
const SHIN_MAX_ITER: usize = 10_000;

#[derive(Debug, Error)]
pub enum OddsError {
    #[error("invalid book: {0}")]
    InvalidBook(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<OptimError> for OddsError {
    fn from(e: OptimError) -> Self {
        OddsError::Solver(e.to_string())
    }
}

/// A book of decimal odds over l >= 2 mutually exclusive outcomes.
#[derive(Debug, Clone)]
pub struct OddsBook {
    odds: Vec<f64>,
    inverse: Vec<f64>,
    booksum: f64,
}

impl OddsBook {
    /// Degenerate books (any odds <= 1, or fewer than two outcomes) are
    /// rejected here so every inverse-odds entry lies in (0, 1).
    pub fn new(odds: Vec<f64>) -> Result<Self, OddsError> {
        if odds.len() < 2 {
            return Err(OddsError::InvalidBook(format!(
                "need at least 2 outcomes, got {}",
                odds.len()
            )));
        }
        if let Some(bad) = odds.iter().find(|o| !(**o > 1.0 && o.is_finite())) {
            return Err(OddsError::InvalidBook(format!(
                "decimal odds must be finite and > 1, got {bad}"
            )));
        }
        let inverse: Vec<f64> = odds.iter().map(|o| 1.0 / o).collect();
        let booksum = inverse.iter().sum();
        Ok(Self { odds, inverse, booksum })
    }

    pub fn odds(&self) -> &[f64] {
        &self.odds
    }

    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    /// Booksum (the margin pi); > 1 for a real book, 1 for a fair book.
    pub fn booksum(&self) -> f64 {
        self.booksum
    }

    pub fn len(&self) -> usize {
        self.odds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.odds.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginMethod {
    Multiplicative,
    OddsRatio,
    Shin,
    Power,
}

/// Margin-free implied probabilities plus the solver residual (the signed
/// deviation of the probability sum from one before the final
/// renormalization).
#[derive(Debug, Clone)]
pub struct ImpliedProbs {
    pub probs: Vec<f64>,
    pub method: MarginMethod,
    pub solver_residual: f64,
}

impl ImpliedProbs {
    fn finish(mut probs: Vec<f64>, method: MarginMethod) -> Self {
        let sum: f64 = probs.iter().sum();
        let solver_residual = sum - 1.0;
        for p in &mut probs {
            *p /= sum;
        }
        Self { probs, method, solver_residual }
    }
}

/// 1/booksum: the expected fraction returned to the bettor under
/// proportional pricing.
pub fn payout_rate(book: &OddsBook) -> f64 {
    1.0 / book.booksum()
}

/// Proportional normalization p_i = pi_i / pi.
pub fn multiplicative(book: &OddsBook) -> ImpliedProbs {
    let probs = book.inverse().iter().map(|pi| pi / book.booksum()).collect();
    ImpliedProbs::finish(probs, MarginMethod::Multiplicative)
}

fn odds_ratio_probs(book: &OddsBook, or: f64) -> Vec<f64> {
    book.inverse().iter().map(|pi| pi / (or + pi - or * pi)).collect()
}

/// Odds-ratio method: a common odds ratio between implied and raw
/// probabilities, solved so the implied probabilities sum to one.
pub fn odds_ratio(book: &OddsBook) -> Result<ImpliedProbs, OddsError> {
    let objective = |or: f64| odds_ratio_probs(book, or).iter().sum::<f64>() - 1.0;
    let root = brent_root(objective, 1e-6, 1e6, 1e-14, 200)?;
    if root.residual.abs() > SUM_TOL {
        return Err(OddsError::Solver(format!(
            "odds-ratio sum residual {:.3e} exceeds tolerance",
            root.residual
        )));
    }
    Ok(ImpliedProbs::finish(odds_ratio_probs(book, root.root), MarginMethod::OddsRatio))
}

fn shin_probs(book: &OddsBook, z: f64) -> Vec<f64> {
    let pi = book.booksum();
    book.inverse()
        .iter()
        .map(|pi_i| ((z * z + 4.0 * (1.0 - z) * pi_i * pi_i / pi).sqrt() - z) / (2.0 * (1.0 - z)))
        .collect()
}

/// Closed-form Shin z for two-outcome books.
fn shin_z_two_outcomes(book: &OddsBook) -> f64 {
    let pi_plus = book.inverse()[0] + book.inverse()[1];
    let pi_minus = book.inverse()[0] - book.inverse()[1];
    (pi_plus - 1.0) * (pi_minus * pi_minus - pi_plus) / (pi_plus * (pi_minus * pi_minus - 1.0))
}

/// Shin's method. For l = 2 the fixed-point iteration divides by l - 2, so
/// the closed form is the only path; for l >= 3 the iteration from z = 0 runs
/// until the step falls below 1e-12.
pub fn shin(book: &OddsBook) -> Result<ImpliedProbs, OddsError> {
    let z = if book.len() == 2 {
        shin_z_two_outcomes(book)
    } else {
        let pi = book.booksum();
        let l = book.len() as f64;
        let mut z = 0.0f64;
        let mut converged = false;
        for _ in 0..SHIN_MAX_ITER {
            let s: f64 = book
                .inverse()
                .iter()
                .map(|pi_i| (z * z + 4.0 * (1.0 - z) * pi_i * pi_i / pi).sqrt())
                .sum();
            let next = (s - 2.0) / (l - 2.0);
            let step = (next - z).abs();
            z = next;
            if step < SHIN_STEP_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(OddsError::Solver(format!(
                "Shin iteration did not converge within {SHIN_MAX_ITER} steps; last z = {z:.6e}"
            )));
        }
        z
    };
    Ok(ImpliedProbs::finish(shin_probs(book, z), MarginMethod::Shin))
}

/// Power method p_i = pi_i^(1/k). The root is found on the exponent
/// u = 1/k in [0.1, 10]; books with margin solve at u > 1 (equivalently
/// k < 1), fair books at exactly u = 1.
pub fn power(book: &OddsBook) -> Result<ImpliedProbs, OddsError> {
    let objective =
        |u: f64| book.inverse().iter().map(|pi| pi.powf(u)).sum::<f64>() - 1.0;
    let root = brent_root(objective, 0.1, 10.0, 1e-14, 200)?;
    if root.residual.abs() > SUM_TOL {
        return Err(OddsError::Solver(format!(
            "power sum residual {:.3e} exceeds tolerance",
            root.residual
        )));
    }
    let probs = book.inverse().iter().map(|pi| pi.powf(root.root)).collect();
    Ok(ImpliedProbs::finish(probs, MarginMethod::Power))
}

pub fn remove_margin(book: &OddsBook, method: MarginMethod) -> Result<ImpliedProbs, OddsError> {
    match method {
        MarginMethod::Multiplicative => Ok(multiplicative(book)),
        MarginMethod::OddsRatio => odds_ratio(book),
        MarginMethod::Shin => shin(book),
        MarginMethod::Power => power(book),
    }
}

/// Negative logarithmic scoring rule, reported as a positive total:
/// -sum over events of log p(observed outcome). Lower is better. A zero
/// probability on a realized outcome yields +infinity rather than an error.
pub fn neg_log_score(probs: &[Vec<f64>], outcomes: &[usize]) -> Result<f64, OddsError> {
    if probs.len() != outcomes.len() {
        return Err(OddsError::InvalidInput(format!(
            "{} probability vectors vs {} outcomes",
            probs.len(),
            outcomes.len()
        )));
    }
    let mut total = 0.0f64;
    for (event, (p, &obs)) in probs.iter().zip(outcomes).enumerate() {
        if obs >= p.len() {
            return Err(OddsError::InvalidInput(format!(
                "event {event}: outcome index {obs} out of range for {} outcomes",
                p.len()
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(OddsError::InvalidInput(format!(
                "event {event}: probabilities sum to {sum}, expected 1"
            )));
        }
        if p[obs] <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total -= p[obs].ln();
    }
    Ok(total)
}
