//! Cassettes: recorded request→completion stores for deterministic offline
//! replay. JSON Lines, one entry per line.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Completion, FinishReason, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub request_summary: String,
    pub completion_text: String,
    pub finish_reason: FinishReason,
}

impl CassetteEntry {
    pub fn completion(&self) -> Completion {
        Completion {
            text: self.completion_text.clone(),
            finish_reason: self.finish_reason,
            request_fingerprint: self.fingerprint.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cassette {
    name: String,
    entries: Vec<CassetteEntry>,
    by_fingerprint: HashMap<String, usize>,
}

impl Cassette {
    pub fn empty(name: &str) -> Self {
        Cassette {
            name: name.to_string(),
            entries: Vec::new(),
            by_fingerprint: HashMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let file = File::open(path).map_err(|source| LlmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cassette = Cassette::empty(
            path.file_stem().and_then(|s| s.to_str()).unwrap_or("cassette"),
        );
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| LlmError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry =
                serde_json::from_str(&line).map_err(|e| LlmError::InvalidCassette {
                    path: path.display().to_string(),
                    reason: format!("line {}: {}", i + 1, e),
                })?;
            cassette.push(entry).map_err(|fp| LlmError::InvalidCassette {
                path: path.display().to_string(),
                reason: format!("duplicate fingerprint {fp} at line {}", i + 1),
            })?;
        }
        Ok(cassette)
    }

    pub fn push(&mut self, entry: CassetteEntry) -> Result<(), String> {
        if self.by_fingerprint.contains_key(&entry.fingerprint) {
            return Err(entry.fingerprint);
        }
        self.by_fingerprint
            .insert(entry.fingerprint.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn lookup(&self, fingerprint: &str) -> Option<&CassetteEntry> {
        self.by_fingerprint
            .get(fingerprint)
            .map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[CassetteEntry] {
        &self.entries
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// Append-only cassette file handle; one JSON object per line, flushed per
/// entry so partially-complete runs still leave a usable cassette.
pub struct CassetteWriter {
    path: String,
    writer: BufWriter<File>,
}

impl CassetteWriter {
    pub fn open_append(path: &Path) -> Result<Self, LlmError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|source| LlmError::Io {
                    path: parent.display().to_string(),
                    source,
                })?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| LlmError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(CassetteWriter {
            path: path.display().to_string(),
            writer: BufWriter::new(file),
        })
    }

    pub fn append_entry(&mut self, entry: &CassetteEntry) -> Result<(), LlmError> {
        let line = serde_json::to_string(entry).expect("cassette entries always serialize");
        writeln!(self.writer, "{line}").map_err(|source| LlmError::Io {
            path: self.path.clone(),
            source,
        })?;
        self.writer.flush().map_err(|source| LlmError::Io {
            path: self.path.clone(),
            source,
        })
    }
}
