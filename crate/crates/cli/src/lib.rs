//! Command-line pipelines over `wds_core`: typed configs, deterministic
//! artifacts with sha256 manifests, and a verified summary of many runs.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod svg;

pub use commands::{run, run_report};
pub use config::{RunConfig, SCHEMAS};
pub use error::CliError;
pub use manifest::{report, RunManifest, Summary};
