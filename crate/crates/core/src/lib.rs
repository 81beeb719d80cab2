//! Pedestrian road-collision analytics.
//!
//! The pipeline runs ingest → targets → split/SMOTE → tree ensembles →
//! evaluation → tree SHAP, with a district-level spatial join on the side.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod math;
pub mod rng;

pub use error::{Error, Result};
pub mod cli;
pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod geo;
pub mod metrics;
pub mod pipeline;
pub mod resample;
pub mod shap;
pub mod targets;
pub mod tree;
