//! The published dataset file: JSON Lines, one session per line.
//!
//! Clip paths are emitted relative to the dataset root and are derived from
//! (session id, turn index), so the file round-trips losslessly without
//! storing anything that cannot be reconstructed.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Session, Split};
use crate::dialogue::{ActionType, Conversation, DialogueTurn, SpeechStyle, TurnKind};
use crate::instruction::{InstructionSet, InstructionStep, Provenance};
use crate::localize::clip_filename;
use crate::time::TimeSpan;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionRecord {
    schema_version: u32,
    session_id: String,
    task: String,
    style: SpeechStyle,
    action_type: ActionType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    source_recording_id: String,
    provenance: Provenance,
    instructions: Vec<InstructionRecord>,
    turns: Vec<TurnRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstructionRecord {
    ordinal: u32,
    text: String,
    is_correction: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    span: Option<TimeSpan>,
    #[serde(default)]
    source_refs: Vec<u32>,
    #[serde(default)]
    caveats: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnRecord {
    index: u32,
    kind: TurnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step_ordinal: Option<u32>,
    user_text: String,
    expert_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    span: Option<TimeSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clip_path: Option<String>,
}

fn to_record(session: &Session) -> SessionRecord {
    SessionRecord {
        schema_version: SCHEMA_VERSION,
        session_id: session.session_id.clone(),
        task: session.task.clone(),
        style: session.style,
        action_type: session.action_type,
        split: session.split,
        source_recording_id: session.source_recording_id.clone(),
        provenance: session.instruction_set.provenance,
        instructions: session
            .instruction_set
            .steps
            .iter()
            .map(|step| InstructionRecord {
                ordinal: step.ordinal,
                text: step.text.clone(),
                is_correction: step.is_correction,
                span: step.span,
                source_refs: step.source_refs.clone(),
                caveats: step.caveats.clone(),
            })
            .collect(),
        turns: session
            .conversation
            .turns
            .iter()
            .map(|turn| TurnRecord {
                index: turn.index,
                kind: turn.kind,
                step_ordinal: turn.step_ordinal,
                user_text: turn.user_text.clone(),
                expert_text: turn.expert_text.clone(),
                span: turn.span,
                clip_path: turn
                    .span
                    .map(|_| format!("clips/{}", clip_filename(&session.session_id, turn.index))),
            })
            .collect(),
    }
}

fn from_record(record: SessionRecord) -> Session {
    let instruction_set = InstructionSet {
        task: record.task.clone(),
        recording_id: record.source_recording_id.clone(),
        provenance: record.provenance,
        steps: record
            .instructions
            .into_iter()
            .map(|r| InstructionStep {
                ordinal: r.ordinal,
                text: r.text,
                span: r.span,
                is_correction: r.is_correction,
                source_refs: r.source_refs,
                caveats: r.caveats,
            })
            .collect(),
    };
    let conversation = Conversation {
        task: record.task.clone(),
        style: record.style,
        action_type: record.action_type,
        source_recording_id: record.source_recording_id.clone(),
        turns: record
            .turns
            .into_iter()
            .map(|r| DialogueTurn {
                index: r.index,
                kind: r.kind,
                user_text: r.user_text,
                expert_text: r.expert_text,
                span: r.span,
                step_ordinal: r.step_ordinal,
            })
            .collect(),
    };
    Session {
        session_id: record.session_id,
        task: record.task,
        style: record.style,
        action_type: record.action_type,
        split: record.split,
        source_recording_id: record.source_recording_id,
        instruction_set,
        conversation,
    }
}

/// Writes sessions as JSON Lines, atomically (temp file + rename).
pub fn write_dataset(sessions: &[Session], path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut file = std::fs::File::create(&tmp).map_err(io_err)?;
        for session in sessions {
            let line = serde_json::to_string(&to_record(session)).map_err(|e| {
                DatasetError::SchemaViolation {
                    line: 0,
                    detail: format!("serializing session {}: {e}", session.session_id),
                }
            })?;
            writeln!(file, "{line}").map_err(io_err)?;
        }
        file.flush().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Reads a dataset file back into sessions. An empty file is an empty
/// corpus; malformed lines report their line number and the offending
/// field.
pub fn read_dataset(path: &Path) -> Result<Vec<Session>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut sessions = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SessionRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::SchemaViolation {
                line: i + 1,
                detail: e.to_string(),
            })?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::SchemaViolation {
                line: i + 1,
                detail: format!(
                    "schema_version {} (this reader supports {})",
                    record.schema_version, SCHEMA_VERSION
                ),
            });
        }
        sessions.push(from_record(record));
    }
    Ok(sessions)
}
