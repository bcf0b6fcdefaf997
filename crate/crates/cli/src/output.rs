//! Error classes and atomic file output.

use std::fmt;
use std::io::Write;
use std::path::Path;

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    Internal(String),
    /// Unreadable or malformed input; exit 2.
    Input(String),
    /// Invalid sequence, empty solid or failed reconstruction; exit 3.
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Internal(m) | CliError::Input(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn input_err(e: impl fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn domain_err(e: impl fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult {
    let io = |e: std::io::Error| CliError::Internal(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}
