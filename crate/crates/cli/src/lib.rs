//! Configuration-driven verification runs on top of `dilaton-core`.
//!
//! Each command turns an [`ExperimentConfig`] into a [`Report`]: a CSV table
//! with a commented header echoing the tolerances, and a list of failed
//! checks. The binary maps the outcome to exit codes 0 (pass), 1 (tolerance
//! failure) and 2 (invalid input).

// NaN must fail every tolerance check, hence `!(x <= tol)` throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;

pub use config::ExperimentConfig;
pub use report::{Cell, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dilaton_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
