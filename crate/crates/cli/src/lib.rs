//! Library side of `jclass-lab`: scenario files, built-in examples and the
//! sub-command implementations.

pub mod builtin;
pub mod commands;
pub mod config;

pub use commands::{BuilderChoice, ExampleArgs, OracleArgs, Status};
pub use config::{ConfigError, Overrides, Scenario, ScenarioConfig};

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
