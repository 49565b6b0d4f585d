//! Config-driven commands that read and write run directories.

pub mod cli;
pub mod commands;
pub mod config;
pub mod container;
pub mod plots;

pub use commands::{run_command, Command, RunManifest, MANIFEST_FILE};
pub use config::RunConfig;
pub use container::DatasetContainer;
