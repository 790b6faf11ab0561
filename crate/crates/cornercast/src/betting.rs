//! Expected-value betting on corner over/under quotes and ledger accounting.
//!
//! A flat 100-unit stake goes on any selection with positive model expected
//! value. Integer lines can push (stake refunded); the Sharpe ratio is the
//! mean daily profit over its sample standard deviation, annualized by the
//! square root of 364 trade days, over days with at least one settled bet.

use crate::data::DailySeries;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub const FLAT_STAKE: f64 = 100.0;
pub const TRADE_DAYS: f64 = 364.0;

#[derive(Debug, Error)]
pub enum BettingError {
    #[error("invalid quote: {0}")]
    InvalidQuote(String),
    #[error("invalid predictive: {0}")]
    InvalidPredictive(String),
}

/// One corner over/under market quote.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerQuote {
    pub match_id: String,
    pub line: f64,
    pub over_odds: f64,
    pub under_odds: f64,
    pub kickoff_date: String,
}

impl CornerQuote {
    pub fn new(
        match_id: impl Into<String>,
        line: f64,
        over_odds: f64,
        under_odds: f64,
        kickoff_date: impl Into<String>,
    ) -> Result<Self, BettingError> {
        if line <= 0.0 {
            return Err(BettingError::InvalidQuote(format!("line must be positive, got {line}")));
        }
        if over_odds <= 1.0 || under_odds <= 1.0 {
            return Err(BettingError::InvalidQuote(format!(
                "odds must exceed 1, got over {over_odds} / under {under_odds}"
            )));
        }
        Ok(Self {
            match_id: match_id.into(),
            line,
            over_odds,
            under_odds,
            kickoff_date: kickoff_date.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    Over,
    Under,
    NoBet,
}

impl Selection {
    pub fn as_str(&self) -> &'static str {
        match self {
            Selection::Over => "over",
            Selection::Under => "under",
            Selection::NoBet => "no_bet",
        }
    }
}

/// A staking decision with both side EVs recorded.
#[derive(Debug, Clone, Copy)]
pub struct BetDecision {
    pub selection: Selection,
    pub stake: f64,
    /// Model win probability of the selected side (over side for NoBet).
    pub model_prob: f64,
    /// Expected value per unit stake of the selected side (the better side
    /// for NoBet).
    pub expected_value: f64,
    pub ev_over: f64,
    pub ev_under: f64,
}

/// Split a predictive pmf at the line. Half-integer lines cannot push;
/// integer lines push on an exact hit.
pub fn over_under_probs(pmf: &[f64], line: f64) -> (f64, f64, f64) {
    let mut p_over = 0.0;
    let mut p_under = 0.0;
    let mut p_push = 0.0;
    for (y, p) in pmf.iter().enumerate() {
        let yf = y as f64;
        if (yf - line).abs() < 1e-9 {
            p_push += p;
        } else if yf > line {
            p_over += p;
        } else {
            p_under += p;
        }
    }
    (p_over, p_under, p_push)
}

/// Expected value per unit stake: win pays odds - 1, a push refunds the
/// stake, a loss costs it.
pub fn expected_value(p_win: f64, p_push: f64, odds: f64) -> f64 {
    p_win * (odds - 1.0) - (1.0 - p_win - p_push)
}

/// Stake when a side has positive EV; the larger side wins when both do
/// (ties break toward Over), and inconsistent predictions stand down.
pub fn decide(quote: &CornerQuote, predictive_pmf: &[f64]) -> BetDecision {
    let (p_over, p_under, p_push) = over_under_probs(predictive_pmf, quote.line);
    let ev_over = expected_value(p_over, p_push, quote.over_odds);
    let ev_under = expected_value(p_under, p_push, quote.under_odds);
    let (selection, model_prob, ev) = if ev_over <= 0.0 && ev_under <= 0.0 {
        (Selection::NoBet, p_over, ev_over.max(ev_under))
    } else if ev_over >= ev_under {
        (Selection::Over, p_over, ev_over)
    } else {
        (Selection::Under, p_under, ev_under)
    };
    BetDecision {
        selection,
        stake: if selection == Selection::NoBet { 0.0 } else { FLAT_STAKE },
        model_prob,
        expected_value: ev,
        ev_over,
        ev_under,
    }
}

/// Settle a placed bet against the realized corner count.
/// Requires a real selection; deciding NoBet never reaches settlement.
pub fn settle(decision: &BetDecision, quote: &CornerQuote, actual_corners: u32) -> f64 {
    assert!(decision.selection != Selection::NoBet, "cannot settle a no-bet");
    let actual = actual_corners as f64;
    if (actual - quote.line).abs() < 1e-9 {
        return 0.0; // push: stake refunded
    }
    let won = match decision.selection {
        Selection::Over => actual > quote.line,
        Selection::Under => actual < quote.line,
        Selection::NoBet => unreachable!(),
    };
    let odds = match decision.selection {
        Selection::Over => quote.over_odds,
        Selection::Under => quote.under_odds,
        Selection::NoBet => unreachable!(),
    };
    if won {
        decision.stake * (odds - 1.0)
    } else {
        -decision.stake
    }
}

/// Numerator convention for the Sharpe ratio. The aggregated-daily wording
/// admits either reading; mean daily profit is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharpeNumerator {
    MeanDaily,
    TotalDaily,
}

/// Annualized Sharpe ratio over days with at least one settled bet.
/// None when fewer than two active days exist; +/- infinity when the daily
/// profit is constant and nonzero.
pub fn sharpe(daily_profits: &DailySeries, trade_days: f64) -> Option<f64> {
    sharpe_with_numerator(daily_profits, trade_days, SharpeNumerator::MeanDaily)
}

pub fn sharpe_with_numerator(
    daily_profits: &DailySeries,
    trade_days: f64,
    numerator: SharpeNumerator,
) -> Option<f64> {
    if daily_profits.len() < 2 {
        return None;
    }
    let n = daily_profits.len() as f64;
    let values: Vec<f64> = daily_profits.values().cloned().collect();
    let total = values.iter().sum::<f64>();
    let mean = total / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let num = match numerator {
        SharpeNumerator::MeanDaily => mean,
        SharpeNumerator::TotalDaily => total,
    };
    if sd == 0.0 {
        return Some(if num == 0.0 {
            0.0
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    }
    Some(num / sd * trade_days.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Bet the side with positive model expected value.
    ModelEv,
    /// Stake every quote on Under.
    BlindUnder,
}

/// One settled bet in the ledger.
#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub match_id: String,
    pub date: String,
    pub selection: Selection,
    pub stake: f64,
    pub odds: f64,
    pub line: f64,
    pub model_prob: f64,
    pub expected_value: f64,
    pub actual_corners: u32,
    pub profit: f64,
}

/// A quote that produced no ledger entry, with the reason.
#[derive(Debug, Clone)]
pub struct AuditRecord {
    pub match_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LedgerSummary {
    pub num_bets: usize,
    pub total_profit: f64,
    /// total_profit / (stake * num_bets)
    pub profit_pct: f64,
    pub sharpe: Option<f64>,
    pub daily_profits: DailySeries,
}

#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub entries: Vec<LedgerEntry>,
    pub summary: LedgerSummary,
    /// NoBet decisions (EV strategy) with both EVs recorded.
    pub no_bets: Vec<(String, f64, f64)>,
    /// Skipped quotes (missing predictive or outcome) with reasons.
    pub audits: Vec<AuditRecord>,
}

/// Run a strategy over chronologically sorted quotes. `predictives` maps
/// match_id to a predictive pmf (only consulted by the EV strategy);
/// `outcomes` maps match_id to the realized corner count. Quotes without an
/// outcome, or EV quotes without a predictive, are skipped with an audit
/// record.
pub fn backtest(
    quotes: &[CornerQuote],
    predictives: &HashMap<String, Vec<f64>>,
    outcomes: &HashMap<String, u32>,
    strategy: Strategy,
) -> BacktestOutput {
    let mut sorted: Vec<&CornerQuote> = quotes.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.kickoff_date, &a.match_id).cmp(&(&b.kickoff_date, &b.match_id))
    });
    let mut entries = Vec::new();
    let mut audits = Vec::new();
    let mut no_bets = Vec::new();
    let mut daily: DailySeries = DailySeries::new();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for quote in sorted {
        // one quote per match: first line wins, the rest are audited
        if seen.insert(quote.match_id.as_str(), ()).is_some() {
            audits.push(AuditRecord {
                match_id: quote.match_id.clone(),
                reason: "duplicate quote for match; first line kept".into(),
            });
            continue;
        }
        let actual = match outcomes.get(&quote.match_id) {
            Some(a) => *a,
            None => {
                audits.push(AuditRecord {
                    match_id: quote.match_id.clone(),
                    reason: "no realized corner count".into(),
                });
                continue;
            }
        };
        let decision = match strategy {
            Strategy::BlindUnder => BetDecision {
                selection: Selection::Under,
                stake: FLAT_STAKE,
                model_prob: f64::NAN,
                expected_value: f64::NAN,
                ev_over: f64::NAN,
                ev_under: f64::NAN,
            },
            Strategy::ModelEv => {
                let pmf = match predictives.get(&quote.match_id) {
                    Some(p) => p,
                    None => {
                        audits.push(AuditRecord {
                            match_id: quote.match_id.clone(),
                            reason: "no predictive distribution".into(),
                        });
                        continue;
                    }
                };
                let d = decide(quote, pmf);
                if d.selection == Selection::NoBet {
                    no_bets.push((quote.match_id.clone(), d.ev_over, d.ev_under));
                    continue;
                }
                d
            }
        };
        let profit = settle(&decision, quote, actual);
        *daily.entry(quote.kickoff_date.clone()).or_insert(0.0) += profit;
        entries.push(LedgerEntry {
            match_id: quote.match_id.clone(),
            date: quote.kickoff_date.clone(),
            selection: decision.selection,
            stake: decision.stake,
            odds: match decision.selection {
                Selection::Over => quote.over_odds,
                _ => quote.under_odds,
            },
            line: quote.line,
            model_prob: decision.model_prob,
            expected_value: decision.expected_value,
            actual_corners: actual,
            profit,
        });
    }
    let num_bets = entries.len();
    let total_profit: f64 = entries.iter().map(|e| e.profit).sum();
    let profit_pct =
        if num_bets > 0 { total_profit / (FLAT_STAKE * num_bets as f64) } else { 0.0 };
    let sharpe = sharpe(&daily, TRADE_DAYS);
    BacktestOutput {
        entries,
        summary: LedgerSummary {
            num_bets,
            total_profit,
            profit_pct,
            sharpe,
            daily_profits: daily,
        },
        no_bets,
        audits,
    }
}
