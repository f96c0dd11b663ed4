//! Climate-driven crop price volatility and MSP-linked insurance premiums.
//!
//! The pipeline estimates EGARCH conditional volatility of monthly
//! log-returns, re-models it with a SARIMAX driven by climate regressors,
//! forecasts it under emissions scenarios and prices the MSP guarantee as
//! a Black-Scholes put.

pub mod egarch;
pub mod error;
pub mod ingest;
pub mod optim;
pub mod par;
pub mod pipeline;
pub mod pricing;
pub mod sarimax;
pub mod series;

pub use error::{Error, ErrorKind, Result};
