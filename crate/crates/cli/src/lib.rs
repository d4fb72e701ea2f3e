#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Configuration, stage execution and run manifests for the `poldqc` command.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use config::{Preset, RunConfig};
pub use error::CliError;
pub use pipeline::{run, Command, Request};
