//! File formats and command-line front end for the `drnash-core` solver.
//!
//! - [`scenario_file`]: JSON scenario files (`load_scenario`, `save_scenario`)
//! - [`artifacts`]: CSV and JSON run outputs, and reading them back
//! - [`cli`]: the `validate`, `run`, `verify` and `replica` subcommands

pub mod artifacts;
pub mod cli;
pub mod error;
pub mod scenario_file;

pub use error::{Error, Result};
pub use scenario_file::{load_scenario, save_scenario};
