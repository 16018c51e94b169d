//! Command implementations behind the `tns` binary.
//!
//! Exit statuses: 0 success, 1 runtime failure (I/O and the like), 2 bad
//! config or input, 3 solver blowup, 4 failed verification.

pub mod config;
pub mod run;
pub mod verify;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::ConfigError;

/// Environment variable that replaces the base directory for relative
/// output directories (the working directory otherwise).
pub const OUTPUT_ROOT_ENV: &str = "TNS_OUTPUT_ROOT";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Unusable input that is not a config file, such as a corrupt snapshot.
    Input(String),
    Blowup(String),
    Verification(Vec<String>),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Blowup(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Blowup(m) => write!(f, "solver blowup: {m}"),
            CliError::Verification(ids) => write!(f, "verification failed: {}", ids.join(", ")),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}

impl From<tns_core::Error> for CliError {
    fn from(e: tns_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Output directory for a configured relative or absolute `dir`.
pub fn output_dir(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    core_version: &'a str,
    command: &'a str,
    source: String,
    config_echo: &'a str,
    outcome: String,
    wall_time_seconds: f64,
    files: Vec<String>,
}

pub(crate) fn write_manifest(
    dir: &Path,
    command: &str,
    source: &Path,
    outcome: String,
    started: Instant,
    files: &[String],
) -> Result<(), CliError> {
    let m = Manifest {
        tool: "tns",
        version: env!("CARGO_PKG_VERSION"),
        core_version: tns_core::VERSION,
        command,
        source: source.display().to_string(),
        config_echo: "config.toml",
        outcome,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: files.to_vec(),
    };
    let text = toml::to_string(&m).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&dir.join("manifest.toml"), text.as_bytes())
}
