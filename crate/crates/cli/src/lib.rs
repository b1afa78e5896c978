//! Library half of the `eesim` command: configuration, runs and manifests.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use manifest::RunManifest;
