//! Experiment harness behind the `dlp2d` binary: run configurations,
//! table reproductions, and CSV output.

pub mod config;
pub mod experiments;

pub use config::{ConfigError, GeometryChoice, PrecondChoice, RhsChoice, SolveConfig};
