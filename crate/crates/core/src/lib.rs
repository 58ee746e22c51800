//! Cluster-structure change-sign detection with mixture complexity (MC) and
//! its model-fusion extension.
//!
//! The pipeline fits Gaussian mixtures for every candidate component count at
//! each time step, scores each count by its complete-data NML code length,
//! turns those code lengths into a posterior over counts, and reports
//! `MC-fusion(t) = sum_k p(k) * MC_k(t)` alongside MC at the sequentially
//! selected count, the pseudo-Ddim score and two discrete selectors.

pub mod bench;
pub mod complexity;
pub mod config;
pub mod datagen;
pub mod detect;
pub mod error;
pub mod fusion;
pub mod gmm;
pub mod io;
pub mod nml;
pub mod panel;
pub mod pipeline;
pub mod report;
mod seed;

pub use error::{Error, Result};
pub use panel::TimePanel;
pub use seed::derive_seed;
