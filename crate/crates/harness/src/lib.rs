//! Experiment engine for the Bentkus confidence-sequence library: seeded
//! random streams, JSON configuration, runners and CSV/JSON reports.

pub mod config;
mod error;
pub mod report;
pub mod rng;
pub mod runners;

pub use error::{HarnessError, Result};
