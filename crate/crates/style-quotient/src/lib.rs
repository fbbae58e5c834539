//! Style Quotient estimation for weekly retail sales panels.
//!
//! Estimates a per-style "Style Quotient" (SQ) — intrinsic demand for a
//! style's content, decoupled from merchandising levers such as discount
//! and shelf space — from weekly sales data via a log-centered multinomial
//! logit fixed-effects regression. Forecasts demand with the fitted model,
//! backtests against rate-of-sale baselines using wMAPE, and produces
//! decile / brand-level assortment reports.
//!
//! # Module map
//!
//! - [`panel`] — sales panel schema, CSV ingestion, validation, filtering,
//!   train/test splitting.
//! - [`features`] — the six time-varying merchandising features and their
//!   per-week centering.
//! - [`choice_model`] — empirical choice probabilities, log-centered
//!   response, sparse fixed-effects least squares, SQ extraction.
//! - [`forecast`] — four demand models (simple ROS, normalized ROS, mean
//!   intercept, SQ) and wMAPE evaluation.
//! - [`insights`] — SQ distribution stats, decile performance, brand
//!   summaries, top-seller / liquidation classification.
//! - [`synthgen`] — synthetic panel generator with known ground truth,
//!   used for parameter-recovery validation.
//! - [`cli`] — command-line pipeline (`validate`, `fit`, `backtest`,
//!   `report`, `simulate`).

pub mod choice_model;
pub mod cli;
pub mod features;
pub mod forecast;
pub mod insights;
pub mod panel;
pub mod stats;
pub mod synthgen;

pub use panel::{StyleWeekObservation, SubcategoryPanel};
