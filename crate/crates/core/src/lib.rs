//! Calibration analysis for probabilistic classifiers.
//!
//! - [`dataset`]: feature tables, predictions, sessions and class views
//! - [`binning`] / [`metrics`]: conventional reliability diagrams, scoring rules, ECE/MCE
//! - [`lrd`]: learned reliability diagrams
//! - [`selection`]: subgroup and score-region queries
//! - [`synth`]: Gaussian-mixture data with exact posteriors
//! - [`report`] / [`svg`]: JSON reports and SVG plots

pub mod binning;
pub mod dataset;
pub mod error;
pub mod lrd;
pub mod metrics;
pub mod report;
pub mod selection;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
