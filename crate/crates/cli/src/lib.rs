//! Scenario files, bundled scenarios and the `fcl` pipeline.

pub mod config;
pub mod run;

pub use config::{bundled, bundled_scenarios, ConfigError, Scenario};
pub use run::{compute, verify, write, Command, Products, RunError};
