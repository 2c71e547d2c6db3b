//! Configuration, run orchestration, artifact writers and the acceptance
//! battery used by the `radfield` binary.

pub mod check;
pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig};
pub use output::write_outputs;
pub use run::{execute, RunError, RunOutcome, RunReport};
