//! Library half of the `agent` binary: layered configuration, the
//! subcommand implementations and the arena HTTP service.

pub mod commands;
pub mod config;
pub mod service;

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or contradictory settings. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Bad input data or a failed operation. Exit code 1.
    #[error(transparent)]
    Domain(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Domain(_) => "domain",
        }
    }

    /// One JSON line for the diagnostic stream.
    pub fn to_json(&self) -> serde_json::Value {
        let causes: Vec<String> = match self {
            CliError::Usage(_) => Vec::new(),
            CliError::Domain(e) => e.chain().skip(1).map(ToString::to_string).collect(),
        };
        serde_json::json!({ "error": self.kind(), "message": self.to_string(), "causes": causes })
    }
}

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Unwraps a merged setting or names both ways of providing it.
pub fn required<T>(value: Option<T>, flag: &str, section: &str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        usage(format!("--{flag} is required (or set `{}` under [{section}] in the config file)", flag.replace('-', "_")))
    })
}

/// Writes through a temporary file in the same directory and renames it over
/// `path`, so readers never see a partial file and a failure leaves any
/// previous content untouched.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// One compact JSON document per line.
pub fn write_jsonl_atomic<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).map_err(std::io::Error::other)?);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}
