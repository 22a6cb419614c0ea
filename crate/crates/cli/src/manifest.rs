use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_bytes, sha256_hex, write_json, MANIFEST_SCHEMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to rerun a command: the resolved configuration and the
/// digests of every file read and written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub arguments: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            tool_version: shift_audit::VERSION.into(),
            arguments: std::env::args().skip(1).collect(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        if self.inputs.iter().any(|f| f.path == path) {
            return;
        }
        self.inputs.push(FileDigest {
            path: path.into(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(FileDigest {
            path: path.into(),
            sha256: sha256_hex(bytes),
        });
    }

    /// Hashes an input file already read elsewhere.
    pub fn input_file(&mut self, path: &Path) -> CliResult<()> {
        let bytes = read_bytes(path)?;
        self.input(path, &bytes);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, MANIFEST_SCHEMA, self)
    }

    /// Recomputes every digest. Relative paths resolve against `base`.
    pub fn verify(&self, base: &Path) -> CliResult<usize> {
        let mut bad = Vec::new();
        for f in self.inputs.iter().chain(&self.outputs) {
            let path = if f.path.is_absolute() { f.path.clone() } else { base.join(&f.path) };
            match std::fs::read(&path) {
                Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
                Ok(_) => bad.push(format!("{}: digest differs", path.display())),
                Err(e) => bad.push(format!("{}: {e}", path.display())),
            }
        }
        if bad.is_empty() {
            Ok(self.inputs.len() + self.outputs.len())
        } else {
            Err(CliError::ManifestMismatch(bad.join("; ")))
        }
    }
}
