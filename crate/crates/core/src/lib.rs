//! Forecasting day-over-day price directions (Up, Down, Stay) across a
//! panel of markets.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod learners;
pub mod panel;
pub mod synth;
pub mod window;

pub use error::{Error, Result};
