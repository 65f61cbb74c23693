//! Config-driven experiment runner: simulation, estimation, verification
//! against closed-form targets, forward evolution and SVG rendering.

pub mod app;
pub mod config;
pub mod render;
pub mod runner;
pub mod targets;

pub use app::{run, Command, Format, Outcome, RunOptions};
pub use config::{parse_config, ConfigError, Experiment, ExperimentConfig};
