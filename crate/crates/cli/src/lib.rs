//! File formats, dataset bundles and the `eagle` command line.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod matrix_io;

mod app;

pub use app::{run, Cli, Command};
pub use bundle::{load_bundle, save_bundle, Dataset};
pub use error::{CliError, Result};

/// Version stamped into every JSON output and bundle header.
pub const SCHEMA_VERSION: u32 = 1;
