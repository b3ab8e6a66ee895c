//! JSONL files with an audit manifest line, written atomically.
//!
//! Every output file starts with a `{"_manifest": ...}` line recording the
//! tool version, the hash of the resolved configuration and the seed, so a
//! run can be reproduced from its outputs. Readers skip the manifest line
//! transparently. Writes go to a sibling temp file and rename into place,
//! so interrupted runs never leave partial shards.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Provenance line embedded in every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Manifest {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        Manifest {
            tool: "merit".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            seed,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    _manifest: Manifest,
}

fn io_err(path: &Path, source: std::io::Error) -> JsonlError {
    JsonlError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), JsonlError> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut file = std::fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        file.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
        file.sync_all().map_err(|e| io_err(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Serializes records to JSONL behind a manifest line, atomically.
pub fn write_jsonl<T: Serialize>(
    path: &Path,
    manifest: &Manifest,
    records: impl IntoIterator<Item = T>,
) -> Result<(), JsonlError> {
    let mut buf = Vec::new();
    let header = ManifestLine {
        _manifest: manifest.clone(),
    };
    serde_json::to_writer(&mut buf, &header).expect("manifest serializes");
    buf.push(b'\n');
    for record in records {
        serde_json::to_writer(&mut buf, &record).map_err(|e| JsonlError::Parse {
            path: path.display().to_string(),
            line: 0,
            source: e,
        })?;
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

/// Reads a JSONL file, returning its manifest (if it carries one) and the
/// records.
pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
) -> Result<(Option<Manifest>, Vec<T>), JsonlError> {
    let content = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut manifest = None;
    let mut records = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 {
            if let Ok(head) = serde_json::from_str::<ManifestLine>(line) {
                manifest = Some(head._manifest);
                continue;
            }
        }
        let record: T = serde_json::from_str(line).map_err(|e| JsonlError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            source: e,
        })?;
        records.push(record);
    }
    Ok((manifest, records))
}

/// Writes one JSON document (a report or config-like object) atomically,
/// pretty-printed with a trailing newline.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonlError> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| JsonlError::Parse {
        path: path.display().to_string(),
        line: 0,
        source: e,
    })?;
    buf.push(b'\n');
    atomic_write(path, &buf)
}
