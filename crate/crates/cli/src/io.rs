//! File plumbing: atomic writes, schema-tagged JSON, sample CSVs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shift_audit::{DomainTag, SampleSet};

use crate::error::{CliError, CliResult};

pub const MODEL_SCHEMA: &str = "shift-audit/model/v1";
pub const PROBLEM_SCHEMA: &str = "shift-audit/problem/v1";
pub const DIAGNOSE_SCHEMA: &str = "shift-audit/diagnose-report/v1";
pub const EVALUATE_SCHEMA: &str = "shift-audit/evaluate-report/v1";
pub const BOUND_SCHEMA: &str = "shift-audit/bound-report/v1";
pub const SUMMARY_SCHEMA: &str = "shift-audit/replicate-summary/v1";
pub const MANIFEST_SCHEMA: &str = "shift-audit/run-manifest/v1";

/// A JSON document with a leading "schema" field.
#[derive(Debug, Serialize, Deserialize)]
pub struct Tagged<T> {
    pub schema: String,
    #[serde(flatten)]
    pub body: T,
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(schema: &str, body: &T) -> CliResult<Vec<u8>> {
    let tagged = Tagged {
        schema: schema.to_string(),
        body,
    };
    let mut out = serde_json::to_vec_pretty(&tagged).map_err(shift_audit::Error::from)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, schema: &str, body: &T) -> CliResult<()> {
    write_atomic(path, &to_json(schema, body)?)
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Reads a schema-tagged document, accepting any schema in `accepted`.
/// Untagged documents are accepted as well.
pub fn read_json<T: DeserializeOwned>(path: &Path, accepted: &[&str]) -> CliResult<T> {
    let bytes = read_bytes(path)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::in_file(path, e.into()))?;
    if let Some(schema) = value.get("schema") {
        let s = schema.as_str().unwrap_or_default();
        if !accepted.contains(&s) {
            return Err(CliError::Input {
                path: path.into(),
                message: format!("unexpected schema {schema}; expected one of {accepted:?}"),
            });
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::in_file(path, e.into()))
}

pub fn read_samples(path: &Path, domain: DomainTag) -> CliResult<SampleSet> {
    let bytes = read_bytes(path)?;
    SampleSet::read_csv(bytes.as_slice(), domain).map_err(|e| CliError::in_file(path, e))
}

pub fn samples_csv(samples: &SampleSet) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    samples.write_csv(&mut out, false)?;
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
