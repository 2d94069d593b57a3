//! Scenario files, runners and CSV output for the `postmarkov` command.

pub mod error;
pub mod run;
pub mod scenario;

pub use error::{CliError, ConfigError};
pub use run::{coefficient_table, compare_scenarios, run_scenario, simulate, write_table, Preset, Table};
pub use scenario::{parse_scenario, serialize_scenario, Method, ScenarioConfig};
