//! File formats, run manifests, the estimation pipeline and the graph
//! experiment harness around [`kpm_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod table1;

pub use error::{CliError, CliResult};
pub use kpm_core as core;
