use std::fs;
use std::path::{Path, PathBuf};

use ruinkit_core::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const EXIT_IO: u8 = 2;
pub const EXIT_COMPUTE: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, kind: &str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_IO, "Io", format!("{}: {e}", path.display()))
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, "InvalidConfig", message)
    }

    /// Errors while reading input data count as I/O failures.
    pub fn data(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Parse(_) | Error::EmptyData => {
                Self::new(EXIT_IO, e.kind(), e.to_string())
            }
            other => other.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Parse(_)
            | Error::InvalidConfig(_)
            | Error::UnknownStrategy { .. }
            | Error::BadSampleSize(_) => EXIT_CONFIG,
            _ => EXIT_COMPUTE,
        };
        Self::new(code, e.kind(), e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a TOML or JSON config; the extension decides, and without one a
/// leading `{` means JSON.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => true,
        Some("toml") => false,
        _ => text.trim_start().starts_with('{'),
    };
    if json {
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// `--seed`, then `RUINKIT_SEED`, then the config, then the default.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var("RUINKIT_SEED") {
        return v.trim().parse().map_err(|_| {
            CliError::config(format!(
                "RUINKIT_SEED must be an unsigned integer, got '{v}'"
            ))
        });
    }
    Ok(config.unwrap_or(DEFAULT_SEED))
}

pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> CliResult<usize> {
    let w = flag.or(config).unwrap_or(1);
    if w == 0 {
        return Err(CliError::config("workers must be at least 1"));
    }
    Ok(w)
}

/// Collects the files written into one output directory and finishes with
/// the manifest.
pub struct OutDir {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::new(EXIT_COMPUTE, "Serialize", e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// `manifest.json`: the command, the fully resolved inputs and the
    /// files written. Contains nothing that varies between identical runs.
    pub fn finish<T: Serialize>(
        mut self,
        command: &str,
        seed: u64,
        workers: usize,
        resolved: &T,
    ) -> CliResult<()> {
        let manifest = serde_json::json!({
            "tool": "ruinkit",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "workers": workers,
            "config": resolved,
            "outputs": self.files,
        });
        self.files = Vec::new();
        self.write_json("manifest.json", &manifest)
    }
}

/// Writes rows of numbers as CSV. Values use the shortest representation
/// that reads back to the same `f64`.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
