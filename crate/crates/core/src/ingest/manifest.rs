//! Recording manifests: one CSV row per source recording, with pointers to
//! the subtitle or step-annotation files that describe it.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::subtitle::SubtitleFormat;
use super::{parse_step_annotation_file, parse_subtitle_file, IngestError, SourceKind, SourceRecording};
use crate::time::round_ms;

/// Loads a manifest CSV (`recording_id,task,duration_s,source_kind,
/// subtitle_path,steps_path,egocentric`) and parses every referenced file.
/// Relative paths resolve against the manifest's directory; output order
/// matches manifest order. An optional `frame_count` column is honored when
/// present.
pub fn load_manifest(path: &Path) -> Result<Vec<SourceRecording>, IngestError> {
    let content = std::fs::read(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile {
            path: path.display().to_string(),
        },
        _ => IngestError::Io {
            path: path.display().to_string(),
            source,
        },
    })?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(content.as_slice());

    let headers = reader
        .headers()
        .map_err(|e| IngestError::MalformedRow {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "recording_id",
        "task",
        "duration_s",
        "source_kind",
        "subtitle_path",
        "steps_path",
        "egocentric",
    ];
    for name in required {
        if col(name).is_none() {
            return Err(IngestError::MalformedRow {
                row: 1,
                reason: format!("manifest header missing column {name:?}"),
            });
        }
    }
    let frame_count_col = col("frame_count");

    let mut seen = HashSet::new();
    let mut recordings = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |name: &str| record.get(col(name).unwrap()).unwrap_or("").trim();

        let recording_id = field("recording_id").to_string();
        if recording_id.is_empty() {
            return Err(IngestError::MalformedRow {
                row,
                reason: "empty recording_id".into(),
            });
        }
        if !seen.insert(recording_id.clone()) {
            return Err(IngestError::DuplicateRecordingId(recording_id));
        }

        let duration_s: f64 = field("duration_s").parse().map_err(|_| IngestError::MalformedRow {
            row,
            reason: format!("bad duration_s {:?}", field("duration_s")),
        })?;
        let source_kind = match field("source_kind") {
            "narrated" => SourceKind::Narrated,
            "annotated" => SourceKind::Annotated,
            other => {
                return Err(IngestError::MalformedRow {
                    row,
                    reason: format!("unknown source_kind {other:?}"),
                })
            }
        };
        let egocentric = match field("egocentric").to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => {
                return Err(IngestError::MalformedRow {
                    row,
                    reason: format!("bad egocentric flag {other:?}"),
                })
            }
        };
        let frame_count = match frame_count_col {
            Some(idx) => match record.get(idx).map(str::trim).unwrap_or("") {
                "" => None,
                raw => Some(raw.parse::<u64>().map_err(|_| IngestError::MalformedRow {
                    row,
                    reason: format!("bad frame_count {raw:?}"),
                })?),
            },
            None => None,
        };

        let subtitles = match (source_kind, field("subtitle_path")) {
            (SourceKind::Narrated, "") => {
                return Err(IngestError::MalformedRow {
                    row,
                    reason: "narrated recording without subtitle_path".into(),
                })
            }
            (_, "") => None,
            (_, rel) => {
                let file = resolve(base, rel);
                let format = SubtitleFormat::from_path(&file).ok_or_else(|| {
                    IngestError::MalformedRow {
                        row,
                        reason: format!("subtitle_path {rel:?} is neither .srt nor .vtt"),
                    }
                })?;
                let bytes = read_referenced(&file)?;
                Some(parse_subtitle_file(&bytes, format)?)
            }
        };

        let steps = match (source_kind, field("steps_path")) {
            (SourceKind::Annotated, "") => {
                return Err(IngestError::MalformedRow {
                    row,
                    reason: "annotated recording without steps_path".into(),
                })
            }
            (_, "") => None,
            (_, rel) => {
                let bytes = read_referenced(&resolve(base, rel))?;
                Some(parse_step_annotation_file(&bytes)?)
            }
        };

        recordings.push(SourceRecording {
            recording_id,
            task: field("task").to_string(),
            duration_s: round_ms(duration_s),
            source_kind,
            subtitles,
            steps,
            frame_count,
            egocentric,
        });
    }

    Ok(recordings)
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_referenced(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile {
            path: path.display().to_string(),
        },
        _ => IngestError::Io {
            path: path.display().to_string(),
            source,
        },
    })
}
