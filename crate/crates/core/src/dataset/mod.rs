//! Dataset assembly: sessions, the stratified split, corpus statistics, and
//! serialization of the published JSON Lines shape.

mod io;
mod split;
mod stats;

pub use io::{read_dataset, write_dataset, SCHEMA_VERSION};
pub use split::{stratified_split, SplitAssignment, SplitRatios};
pub use stats::{compute_stats, write_stats_report, DistSummary, StatsReport, TaskStats};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dialogue::{validate, ActionType, Conversation, SpeechStyle, ValidationReport};
use crate::instruction::InstructionSet;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("conversation does not validate against its instruction set: {0}")]
    ValidationFailure(ValidationReport),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split ratios {0:?} do not sum to 1")]
    BadRatios((f64, f64, f64)),
    #[error("line {line}: {detail}")]
    SchemaViolation { line: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One dataset unit: a conversation, its instruction set, and category
/// metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub task: String,
    pub style: SpeechStyle,
    pub action_type: ActionType,
    pub split: Option<Split>,
    pub source_recording_id: String,
    pub instruction_set: InstructionSet,
    pub conversation: Conversation,
}

impl Session {
    /// Stratum key used by the split: (task, style, action_type).
    pub fn stratum(&self) -> (String, SpeechStyle, ActionType) {
        (self.task.clone(), self.style, self.action_type)
    }
}

/// Content-derived session identifier, stable across re-runs and parallel
/// assembly.
pub fn session_id(recording_id: &str, style: SpeechStyle, action_type: ActionType) -> String {
    let mut hasher = Sha256::new();
    hasher.update(recording_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(style.as_str().as_bytes());
    hasher.update([0x1f]);
    hasher.update(action_type.as_str().as_bytes());
    let digest = hasher.finalize();
    let mut out = String::from("sess-");
    for byte in &digest[..8] {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Builds a session after checking the conversation against its instruction
/// set; any violation fails assembly with the full report embedded.
pub fn assemble(conversation: Conversation, set: InstructionSet) -> Result<Session, DatasetError> {
    if let Err(reason) = set.check() {
        return Err(DatasetError::SchemaViolation {
            line: 0,
            detail: format!("instruction set: {reason}"),
        });
    }
    let report = validate(&conversation, &set);
    if !report.is_valid() {
        return Err(DatasetError::ValidationFailure(report));
    }
    Ok(Session {
        session_id: session_id(
            &conversation.source_recording_id,
            conversation.style,
            conversation.action_type,
        ),
        task: conversation.task.clone(),
        style: conversation.style,
        action_type: conversation.action_type,
        split: None,
        source_recording_id: conversation.source_recording_id.clone(),
        instruction_set: set,
        conversation,
    })
}

#[cfg(test)]
pub(crate) mod testkit {
    use super::*;
    use crate::dialogue::{DialogueTurn, TurnKind};
    use crate::instruction::{InstructionStep, Provenance};
    use crate::time::TimeSpan;

    /// Minimal schema-valid session for split/stats/io tests.
    pub fn mini_session(
        recording_id: &str,
        task: &str,
        style: SpeechStyle,
        action_type: ActionType,
    ) -> Session {
        let steps: Vec<InstructionStep> = (1..=2)
            .map(|ordinal| InstructionStep {
                ordinal,
                text: format!("Do part {ordinal} of {task}."),
                span: Some(TimeSpan::new(ordinal as f64 * 10.0, ordinal as f64 * 10.0 + 6.0).unwrap()),
                is_correction: action_type == ActionType::Error && ordinal == 2,
                source_refs: vec![ordinal],
                caveats: Vec::new(),
            })
            .collect();
        let set = InstructionSet {
            task: task.into(),
            recording_id: recording_id.into(),
            provenance: Provenance::AnnotationMerge,
            steps,
        };
        let mut turns = vec![DialogueTurn {
            index: 0,
            kind: TurnKind::TaskInit,
            user_text: format!("Please teach me {task}?"),
            expert_text: "Sure, let's begin.".into(),
            span: Some(TimeSpan::new(0.0, 10.0).unwrap()),
            step_ordinal: None,
        }];
        for step in &set.steps {
            if step.is_correction {
                turns.push(DialogueTurn {
                    index: 0,
                    kind: TurnKind::ErrorReport,
                    user_text: "I think I did that wrong just now.".into(),
                    expert_text: "No problem, here is how to recover.".into(),
                    span: step.span,
                    step_ordinal: Some(step.ordinal),
                });
            }
            turns.push(DialogueTurn {
                index: 0,
                kind: TurnKind::Step,
                user_text: if style == SpeechStyle::Concise {
                    "Done. Next?".into()
                } else {
                    "I finished that one, what should I be doing next?".into()
                },
                expert_text: step.text.clone(),
                span: step.span,
                step_ordinal: Some(step.ordinal),
            });
        }
        turns.push(DialogueTurn {
            index: 0,
            kind: TurnKind::Closing,
            user_text: "All finished now!".into(),
            expert_text: "Great work today.".into(),
            span: None,
            step_ordinal: None,
        });
        for (i, turn) in turns.iter_mut().enumerate() {
            turn.index = i as u32 + 1;
        }
        let conversation = Conversation {
            task: task.into(),
            style,
            action_type,
            source_recording_id: recording_id.into(),
            turns,
        };
        assemble(conversation, set).expect("mini session is schema-valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use testkit::mini_session;

    #[test]
    fn assemble_produces_deterministic_ids() {
        let a = mini_session("r1", "making tea", SpeechStyle::Regular, ActionType::Follow);
        let b = mini_session("r1", "making tea", SpeechStyle::Regular, ActionType::Follow);
        assert_eq!(a.session_id, b.session_id);
        let c = mini_session("r1", "making tea", SpeechStyle::Concise, ActionType::Follow);
        assert_ne!(a.session_id, c.session_id);
    }

    #[test]
    fn assemble_rejects_uncovered_step() {
        let mut session = mini_session("r1", "making tea", SpeechStyle::Regular, ActionType::Follow);
        let position = session
            .conversation
            .turns
            .iter()
            .position(|t| t.step_ordinal == Some(2))
            .unwrap();
        session.conversation.turns.remove(position);
        let err = assemble(session.conversation, session.instruction_set).unwrap_err();
        match err {
            DatasetError::ValidationFailure(report) => {
                assert!(report.to_string().contains("step 2 uncovered"))
            }
            other => panic!("expected ValidationFailure, got {other:?}"),
        }
    }
}
