//! Ensemble evaluation of conceptual rainfall-runoff models.
//!
//! Two flux-partitioned daily models (SIMHYD and SACRAMENTO) are run over
//! Latin hypercube ensembles and scored with NSE, the KGE skill score and
//! the refined index of agreement. A Shuffled Complex Evolution search
//! benchmarks how well the ensemble covers the solution space, acceptable
//! runs are placed on a ternary flux map by their runoff-mode shares, and
//! a separate harness measures how each metric degrades under controlled
//! bias, variability and correlation errors.

pub mod cli;
pub mod config;
pub mod corruption;
pub mod error;
pub mod experiment;
pub mod fluxmap;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod sampling;
pub mod series;
pub mod synthetic;

pub use error::{Error, Result};
