//! Command-line front end for `fraglog-core`: run configuration, CSV output
//! and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use config::RunConfig;
pub use error::CliError;
