use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::Value;

use super::commands::{run_command, Command, RunManifest};
use super::config::RunConfig;
use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "latent-forge",
    version,
    about = "Deep-kernel active learning over card images and ferroelectric drive curves"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON config document, or a `run.json` manifest to replay.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting point before the config file is layered on.
    #[arg(long, default_value = "full")]
    pub preset: String,
    /// Dot-path override such as `bo.n_steps=50`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// `random` adds the random-acquisition arm to run-bo.
    #[arg(long, value_name = "random")]
    pub baseline: Option<String>,
}

/// Resolves the full configuration for `cli`: preset, then file, then overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::preset(&cli.preset)?;
    if let Some(path) = &cli.config {
        cfg = load_config_file(path, cli.command, &cfg)?;
    }
    for o in &cli.overrides {
        cfg = cfg.with_override(o)?;
    }
    match cli.baseline.as_deref() {
        None => {}
        Some("random") => cfg.run_bo.baseline = true,
        Some(other) => return Err(Error::Config(format!("unknown baseline `{other}`; only `random` is supported"))),
    }
    Ok(cfg)
}

fn load_config_file(path: &Path, command: Command, base: &RunConfig) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {} is not JSON: {e}", path.display())))?;
    if doc.get("command").is_some() && doc.get("artifacts").is_some() {
        let m: RunManifest =
            serde_json::from_value(doc).map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
        if m.command != command {
            return Err(Error::Config(format!(
                "manifest was written by `{}`, not `{}`",
                m.command.name(),
                command.name()
            )));
        }
        return Ok(m.config);
    }
    base.merged(&doc)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::Load { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| run_command(cli.command, &cfg, &cli.out));
    match result {
        Ok(m) => {
            println!(
                "{} wrote {} artifacts to {} in {:.1}s",
                m.command.name(),
                m.artifacts.len(),
                cli.out.display(),
                m.wall_clock_seconds
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("latent-forge {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}
