//! Experiment harness for the controllers in `deepc-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod instance;
pub mod svg;
pub mod variant;

pub use config::{ExperimentConfig, PlantChoice};
pub use error::{BenchError, Result};
pub use variant::Variant;
