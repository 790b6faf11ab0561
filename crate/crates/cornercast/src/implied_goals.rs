//! Market-implied goal expectations from HAD and total-goals odds.
//!
//! A double independent Poisson score model is fitted per match so that its
//! home-win, draw and under probabilities match the margin-removed market
//! probabilities in squared loss. The fitted rates are reported as the
//! implied total goals TG = l1 + l2 and goal supremacy SUP = l1 - l2, the
//! two market covariates of the corner regression.

use crate::optim::{brent_root, minimize_bounded, numeric_grad, Bounds, MinimizeOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Box bounds for each Poisson goal rate during optimization.
pub const LAMBDA_LOWER: f64 = 0.05;
pub const LAMBDA_UPPER: f64 = 6.0;

/// Default truncation of the per-team goal grid.
pub const DEFAULT_GOAL_TRUNCATION: usize = 20;
/// Wider truncation used inside the optimizer so every point of the box
/// passes the mass check.
const OPTIMIZER_TRUNCATION: usize = 30;

const MASS_DEFICIT_TOL: f64 = 1e-9;

/// Default O/U goals line when the odds feed does not carry one.
pub const DEFAULT_GOALS_LINE: f64 = 2.5;

#[derive(Debug, Error)]
pub enum ImpliedGoalsError {
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncated joint pmf mass deficit {deficit:.3e} exceeds 1e-9 at truncation {truncation}")]
    Truncation { deficit: f64, truncation: usize },
    #[error("solver error: {0}")]
    Solver(String),
}

/// Independent Poisson goal rates for the two teams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePoisson {
    pub lambda_home: f64,
    pub lambda_away: f64,
    pub goal_truncation: usize,
}

impl DoublePoisson {
    pub fn new(lambda_home: f64, lambda_away: f64) -> Result<Self, ImpliedGoalsError> {
        Self::with_truncation(lambda_home, lambda_away, DEFAULT_GOAL_TRUNCATION)
    }

    pub fn with_truncation(
        lambda_home: f64,
        lambda_away: f64,
        goal_truncation: usize,
    ) -> Result<Self, ImpliedGoalsError> {
        for (name, l) in [("lambda_home", lambda_home), ("lambda_away", lambda_away)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(ImpliedGoalsError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {l}"
                )));
            }
        }
        Ok(Self { lambda_home, lambda_away, goal_truncation })
    }
}

/// Margin-removed market probabilities the score model is fitted against.
#[derive(Debug, Clone, Copy)]
pub struct MarketTargets {
    pub p_home: f64,
    pub p_draw: f64,
    pub p_under: f64,
    pub goals_line: f64,
}

impl MarketTargets {
    pub fn new(
        p_home: f64,
        p_draw: f64,
        p_under: f64,
        goals_line: f64,
    ) -> Result<Self, ImpliedGoalsError> {
        for (name, p) in [("p_home", p_home), ("p_draw", p_draw), ("p_under", p_under)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(ImpliedGoalsError::InvalidTargets(format!(
                    "{name} must lie in (0, 1), got {p}"
                )));
            }
        }
        if p_home + p_draw >= 1.0 {
            return Err(ImpliedGoalsError::InvalidTargets(format!(
                "p_home + p_draw = {} leaves no mass for the away win",
                p_home + p_draw
            )));
        }
        if goals_line <= 0.0 {
            return Err(ImpliedGoalsError::InvalidTargets(format!(
                "goals line must be positive, got {goals_line}"
            )));
        }
        Ok(Self { p_home, p_draw, p_under, goals_line })
    }
}

/// Implied total goals and home goal supremacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TgSup {
    pub tg: f64,
    pub sup: f64,
}

impl TgSup {
    /// Invert back to the rate pair: l1 = (tg + sup)/2, l2 = (tg - sup)/2.
    pub fn to_lambdas(&self) -> (f64, f64) {
        ((self.tg + self.sup) / 2.0, (self.tg - self.sup) / 2.0)
    }
}

pub fn tg_sup(dp: &DoublePoisson) -> TgSup {
    TgSup { tg: dp.lambda_home + dp.lambda_away, sup: dp.lambda_home - dp.lambda_away }
}

/// Model probabilities on the truncated score grid.
#[derive(Debug, Clone, Copy)]
pub struct ModelProbs {
    pub home: f64,
    pub draw: f64,
    pub under: f64,
    pub away: f64,
}

fn poisson_pmf_vec(lambda: f64, truncation: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(truncation + 1);
    let mut p = (-lambda).exp();
    v.push(p);
    for x in 1..=truncation {
        p *= lambda / x as f64;
        v.push(p);
    }
    v
}

/// Home-win, draw and under probabilities of the double Poisson model,
/// summed over the truncated grid. Errors when the truncated joint mass
/// falls short of 1 by more than 1e-9.
pub fn model_probs(dp: &DoublePoisson, line: f64) -> Result<ModelProbs, ImpliedGoalsError> {
    if line <= 0.0 {
        return Err(ImpliedGoalsError::InvalidTargets(format!(
            "goals line must be positive, got {line}"
        )));
    }
    let t = dp.goal_truncation;
    let f1 = poisson_pmf_vec(dp.lambda_home, t);
    let f2 = poisson_pmf_vec(dp.lambda_away, t);
    let mass1: f64 = f1.iter().sum();
    let mass2: f64 = f2.iter().sum();
    let deficit = 1.0 - mass1 * mass2;
    if deficit > MASS_DEFICIT_TOL {
        return Err(ImpliedGoalsError::Truncation { deficit, truncation: t });
    }
    // cumulative away pmf: cum2[x] = P(X2 <= x)
    let mut cum2 = vec![0.0; t + 1];
    let mut acc = 0.0;
    for (x, p) in f2.iter().enumerate() {
        acc += p;
        cum2[x] = acc;
    }
    let mut home = 0.0;
    let mut draw = 0.0;
    let mut under = 0.0;
    // "under" counts totals strictly below the line
    let under_cap = if line.fract() == 0.0 { line as i64 - 1 } else { line.floor() as i64 };
    for x1 in 0..=t {
        if x1 > 0 {
            home += f1[x1] * cum2[x1 - 1];
        }
        draw += f1[x1] * f2[x1];
        let rem = under_cap - x1 as i64;
        if rem >= 0 {
            under += f1[x1] * cum2[(rem as usize).min(t)];
        }
    }
    let away = mass1 * mass2 - home - draw;
    Ok(ModelProbs { home, draw, under, away })
}

/// A fitted implied-goals extraction.
#[derive(Debug, Clone, Copy)]
pub struct ImpliedFit {
    pub dp: DoublePoisson,
    /// Squared probability loss achieved at the optimum.
    pub loss: f64,
    /// Set when either rate landed on the box boundary.
    pub at_bound: bool,
    pub converged: bool,
}

fn squared_loss(dp: &DoublePoisson, targets: &MarketTargets) -> f64 {
    match model_probs(dp, targets.goals_line) {
        Ok(p) => {
            (targets.p_home - p.home).powi(2)
                + (targets.p_draw - p.draw).powi(2)
                + (targets.p_under - p.under).powi(2)
        }
        // outside the feasible region; repel the optimizer
        Err(_) => 1e6,
    }
}

/// Moment-matched starting total: invert P(Poisson(tg) < line) = p_under.
fn start_total_from_under(targets: &MarketTargets) -> Option<f64> {
    let under_cap = if targets.goals_line.fract() == 0.0 {
        targets.goals_line as i64 - 1
    } else {
        targets.goals_line.floor() as i64
    };
    if under_cap < 0 {
        return None;
    }
    let cdf = |tg: f64| {
        let pmf = poisson_pmf_vec(tg, under_cap as usize);
        pmf.iter().sum::<f64>()
    };
    let objective = |tg: f64| cdf(tg) - targets.p_under;
    brent_root(objective, 0.02, 2.0 * LAMBDA_UPPER, 1e-10, 200).ok().map(|r| r.root)
}

/// Fit the double Poisson rates to the market targets by bounded
/// quasi-Newton descent with numerical gradients, box [0.05, 6.0] per rate,
/// from three starts (a moment-matched total split evenly, (1,1) and (2,1)).
pub fn fit_implied(targets: &MarketTargets) -> Result<ImpliedFit, ImpliedGoalsError> {
    let bounds = Bounds::new(vec![LAMBDA_LOWER; 2], vec![LAMBDA_UPPER; 2]);
    let loss_at = |x: &[f64]| {
        let dp = DoublePoisson {
            lambda_home: x[0],
            lambda_away: x[1],
            goal_truncation: OPTIMIZER_TRUNCATION,
        };
        squared_loss(&dp, targets)
    };
    let mut starts = vec![[1.0, 1.0], [2.0, 1.0]];
    if let Some(tg0) = start_total_from_under(targets) {
        let half = (tg0 / 2.0).clamp(LAMBDA_LOWER, LAMBDA_UPPER);
        starts.insert(0, [half, half]);
    }
    let opts = MinimizeOptions { max_iter: 300, grad_tol: 1e-11, f_tol: 1e-16 };
    let mut best: Option<ImpliedFit> = None;
    for start in &starts {
        let result = minimize_bounded(
            |x| (loss_at(x), numeric_grad(loss_at, x)),
            start,
            &bounds,
            &opts,
        );
        let at_bound = result.x.iter().any(|l| {
            (l - LAMBDA_LOWER).abs() < 1e-6 || (l - LAMBDA_UPPER).abs() < 1e-6
        });
        let fit = ImpliedFit {
            dp: DoublePoisson {
                lambda_home: result.x[0],
                lambda_away: result.x[1],
                goal_truncation: OPTIMIZER_TRUNCATION,
            },
            loss: result.value,
            at_bound,
            converged: result.converged,
        };
        if best.as_ref().map_or(true, |b| fit.loss < b.loss) {
            best = Some(fit);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged && best.loss > 1e-6 {
        return Err(ImpliedGoalsError::Solver(format!(
            "no start converged; best loss {:.3e} at ({:.4}, {:.4})",
            best.loss, best.dp.lambda_home, best.dp.lambda_away
        )));
    }
    Ok(best)
}

/// Minimum of the loss over an n x n verification grid spanning the box.
/// Used by tests to certify the optimum is a global one.
pub fn grid_min_loss(targets: &MarketTargets, n: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let l1 = LAMBDA_LOWER + (LAMBDA_UPPER - LAMBDA_LOWER) * i as f64 / (n - 1) as f64;
            let l2 = LAMBDA_LOWER + (LAMBDA_UPPER - LAMBDA_LOWER) * j as f64 / (n - 1) as f64;
            let dp = DoublePoisson {
                lambda_home: l1,
                lambda_away: l2,
                goal_truncation: OPTIMIZER_TRUNCATION,
            };
            best = best.min(squared_loss(&dp, targets));
        }
    }
    best
}
