//! Command-line front end for `optobind-core`: scenario files with units,
//! CSV outputs with run manifests, and parallel ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod output;
pub mod units;

pub use commands::{run, Cli};
pub use config::{parse_document, parse_scenario, Loaded, ScenarioDoc};
pub use error::{CliError, CliResult};
