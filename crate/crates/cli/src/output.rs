//! Atomic file output and run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub arguments: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Unix seconds; taken from SOURCE_DATE_EPOCH when set.
    pub timestamp: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| {
        CliError::Io(format!(
            "cannot create temporary file in {}: {e}",
            dir.display()
        ))
    })?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Outputs of one command run, written only after everything succeeded.
pub struct Run {
    command: String,
    arguments: BTreeMap<String, serde_json::Value>,
    inputs: Vec<FileDigest>,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            arguments: BTreeMap::new(),
            inputs: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn arg(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.arguments.insert(name.to_string(), v);
    }

    /// Records an input file and returns its contents.
    pub fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes)
            .map_err(|_| CliError::Validation(format!("{} is not UTF-8", path.display())))
    }

    pub fn output(&mut self, path: Option<&Path>, contents: String) {
        if let Some(p) = path {
            self.files.push((p.to_path_buf(), contents.into_bytes()));
        }
    }

    /// Writes all outputs and, if there are any, a manifest next to the first.
    pub fn finish(self) -> Result<(), CliError> {
        let Some((first, _)) = self.files.first() else {
            return Ok(());
        };
        let mut name = first
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".manifest.json");
        let manifest_path = first.with_file_name(name);
        let outputs = self
            .files
            .iter()
            .map(|(p, b)| FileDigest {
                path: p.display().to_string(),
                sha256: sha256_hex(b),
            })
            .collect();
        let manifest = RunManifest {
            tool: "g4v",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            arguments: self.arguments,
            inputs: self.inputs,
            outputs,
            timestamp: timestamp(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        for (p, b) in &self.files {
            write_atomic(p, b)?;
        }
        write_atomic(&manifest_path, text.as_bytes())
    }
}
