//! Command-line front end for `credible-core`.
//!
//! Subcommands: `simulate` (Monte Carlo study), `diagnose` (error-set CSV),
//! `uwb` (range logs), `uwb-fixture` (synthetic range logs) and `rerun`
//! (repeat a run from its manifest). Exit codes: 0 success, 1 usage or
//! configuration, 2 data, 3 numerical failure.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use args::run;
pub use commands::{cmd_diagnose, cmd_rerun, cmd_simulate, cmd_uwb, cmd_uwb_fixture};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
