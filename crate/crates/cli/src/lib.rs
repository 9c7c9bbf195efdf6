//! Scenario runner for the radial solver: configs in, CSV and summary
//! artifacts out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;

pub use config::{Analysis, ConfigError, InitialData, Scenario};
pub use runner::{run_loaded, run_scenario, simulate, Check, Outcome, RunOptions, Simulation, Status};
