//! Configuration-driven runner for quantum action experiments.
//!
//! A [`RunConfig`] names a system, an oracle, transition times and boundary
//! intervals. [`runner::run_experiment`] computes the propagator tables, fits
//! the quantum action for every `(T, interval)` pair, and writes CSV files
//! plus a `manifest.toml` that replays the run when passed back as config.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exec;
pub mod output;
pub mod runner;

pub use config::{OracleKind, RunConfig, System};
pub use error::RunError;
pub use exec::Pool;
