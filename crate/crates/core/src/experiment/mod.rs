//! Config-driven parameter sweeps with CSV output and run manifests.

pub mod config;
pub mod run;
pub mod table;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, GridSpec, Violation};
pub use run::{run_experiment, RunError, RunOutput};
pub use table::{emit_csv, read_csv, ResultTable, RunManifest, TableError};
