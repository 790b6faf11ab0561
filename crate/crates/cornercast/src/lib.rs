//! Corner-kick count forecasting toolkit.
//!
//! Models association-football corner counts with the discrete compound
//! Poisson family, extracts market covariates from bookmaker odds, fits
//! Bayesian count regressions, compares them by leave-one-out predictive
//! density and backtests over/under betting strategies on the fitted
//! predictive distributions.

pub mod betting;
pub mod cli;
pub mod data;
pub mod dcp;
pub mod features;
pub mod implied_goals;
pub mod model;
pub mod numeric;
pub mod odds;
pub mod optim;
