//! File formats and orchestration around [`halfline_core`]: TOML scenario
//! files, CSV/JSON run artifacts, and the `run` / `converge` / `report`
//! commands behind the `halfline` binary.

pub mod artifacts;
pub mod commands;
pub mod config;

pub use artifacts::{Report, RunArtifact, SCHEMA_VERSION};
pub use commands::CliError;
pub use config::{parse_config, ConfigError, ConfigFile};
