//! Stage 2: convert an instruction set into a multi-turn user–expert
//! conversation with controllable speech style and error behavior.
//!
//! The model emits a strict alternating script (`USER:`/`EXPERT:` lines with
//! end-of-line markers); a deterministic parser maps the script onto typed
//! turns so every structural requirement is checkable.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instruction::{mark_corrections, plain_step_list, InstructionSet};
use crate::llm::{vars, LlmContext, LlmError};
use crate::time::TimeSpan;

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("completion could not be parsed as a dialogue script: {0}")]
    UnparseableCompletion(String),
    #[error("steps {missing:?} have no dialogue turn after regeneration")]
    CoverageFailure { missing: Vec<u32> },
    #[error("error-mode generation needs an instruction set with correction steps")]
    NoCorrectionSteps,
    #[error(transparent)]
    Instruction(#[from] crate::instruction::InstructionError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechStyle {
    Concise,
    Regular,
}

impl SpeechStyle {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpeechStyle::Concise => "concise",
            SpeechStyle::Regular => "regular",
        }
    }

    /// Verbosity target embedded in the generation prompt (a hint, not a
    /// hard constraint).
    pub fn hint(&self) -> &'static str {
        match self {
            SpeechStyle::Concise => "terse, roughly 3-4 words per user turn",
            SpeechStyle::Regular => "conversational, roughly 10-11 words per user turn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Follow,
    Error,
}

impl ActionType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActionType::Follow => "follow",
            ActionType::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    TaskInit,
    Step,
    Clarification,
    ErrorReport,
    Closing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub index: u32,
    pub kind: TurnKind,
    pub user_text: String,
    pub expert_text: String,
    pub span: Option<TimeSpan>,
    pub step_ordinal: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub task: String,
    pub style: SpeechStyle,
    pub action_type: ActionType,
    pub source_recording_id: String,
    pub turns: Vec<DialogueTurn>,
}

impl Conversation {
    pub fn step_turns(&self) -> impl Iterator<Item = &DialogueTurn> {
        self.turns.iter().filter(|t| t.kind == TurnKind::Step)
    }

    fn renumber(&mut self) {
        for (i, turn) in self.turns.iter_mut().enumerate() {
            turn.index = i as u32 + 1;
        }
    }
}

// --- validation ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DialogueViolation {
    MissingTaskInit,
    MissingClosing,
    UncoveredStep { ordinal: u32 },
    DuplicatedStep { ordinal: u32 },
    UnknownStep { ordinal: u32 },
    OutOfOrderStep { ordinal: u32 },
    EmptyText { turn_index: u32 },
    ErrorTurnInFollowMode { turn_index: u32 },
    TaskMismatch { conversation: String, set: String },
}

impl std::fmt::Display for DialogueViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DialogueViolation::MissingTaskInit => write!(f, "first turn is not task_init"),
            DialogueViolation::MissingClosing => write!(f, "last turn is not closing"),
            DialogueViolation::UncoveredStep { ordinal } => write!(f, "step {ordinal} uncovered"),
            DialogueViolation::DuplicatedStep { ordinal } => {
                write!(f, "step {ordinal} covered more than once")
            }
            DialogueViolation::UnknownStep { ordinal } => {
                write!(f, "step {ordinal} does not exist in the instruction set")
            }
            DialogueViolation::OutOfOrderStep { ordinal } => {
                write!(f, "step {ordinal} out of order")
            }
            DialogueViolation::EmptyText { turn_index } => {
                write!(f, "turn {turn_index} has empty user or expert text")
            }
            DialogueViolation::ErrorTurnInFollowMode { turn_index } => {
                write!(f, "turn {turn_index} is an error report in a follow-mode conversation")
            }
            DialogueViolation::TaskMismatch { conversation, set } => {
                write!(f, "conversation task {conversation:?} != instruction task {set:?}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<DialogueViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", lines.join("; "))
    }
}

/// Checks a conversation's structure against its instruction set: step
/// coverage and ordering, text presence, error turns only in error mode.
pub fn validate(conversation: &Conversation, set: &InstructionSet) -> ValidationReport {
    let mut violations = Vec::new();

    if conversation.task != set.task {
        violations.push(DialogueViolation::TaskMismatch {
            conversation: conversation.task.clone(),
            set: set.task.clone(),
        });
    }
    match conversation.turns.first() {
        Some(first) if first.kind == TurnKind::TaskInit => {}
        _ => violations.push(DialogueViolation::MissingTaskInit),
    }
    match conversation.turns.last() {
        Some(last) if last.kind == TurnKind::Closing => {}
        _ => violations.push(DialogueViolation::MissingClosing),
    }

    let mut seen: Vec<u32> = Vec::new();
    for turn in &conversation.turns {
        if turn.user_text.trim().is_empty() || turn.expert_text.trim().is_empty() {
            violations.push(DialogueViolation::EmptyText {
                turn_index: turn.index,
            });
        }
        if turn.kind == TurnKind::ErrorReport && conversation.action_type == ActionType::Follow {
            violations.push(DialogueViolation::ErrorTurnInFollowMode {
                turn_index: turn.index,
            });
        }
        if turn.kind == TurnKind::Step {
            let ordinal = turn.step_ordinal.unwrap_or(0);
            if ordinal == 0 || ordinal > set.steps.len() as u32 {
                violations.push(DialogueViolation::UnknownStep { ordinal });
                continue;
            }
            if seen.contains(&ordinal) {
                violations.push(DialogueViolation::DuplicatedStep { ordinal });
            } else {
                if seen.last().is_some_and(|&prev| ordinal < prev) {
                    violations.push(DialogueViolation::OutOfOrderStep { ordinal });
                }
                seen.push(ordinal);
            }
        }
    }
    for step in &set.steps {
        if !seen.contains(&step.ordinal) {
            violations.push(DialogueViolation::UncoveredStep {
                ordinal: step.ordinal,
            });
        }
    }

    ValidationReport { violations }
}

// --- script parsing -------------------------------------------------------------

static USER_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^USER:\s*(.*)$").unwrap());
static EXPERT_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^EXPERT:\s*(.*)$").unwrap());
static MARKER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\s*#(init|done|step=(\d+)|error=(\d+)|clarify=(\d+))\s*$").unwrap());

fn parse_script(script: &str) -> Result<Vec<DialogueTurn>, String> {
    let mut turns: Vec<DialogueTurn> = Vec::new();
    let mut pending: Option<(TurnKind, Option<u32>, String)> = None;

    for raw in script.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(caps) = USER_LINE.captures(line) {
            if pending.is_some() {
                return Err("two USER lines without an EXPERT line between them".into());
            }
            let full = caps[1].trim().to_string();
            let marker = MARKER
                .captures(&full)
                .ok_or_else(|| format!("USER line without a marker: {full:?}"))?;
            let (kind, ordinal) = match &marker[1] {
                "init" => (TurnKind::TaskInit, None),
                "done" => (TurnKind::Closing, None),
                m if m.starts_with("step=") => {
                    (TurnKind::Step, Some(marker[2].parse::<u32>().map_err(|_| "bad step marker")?))
                }
                m if m.starts_with("error=") => (
                    TurnKind::ErrorReport,
                    Some(marker[3].parse::<u32>().map_err(|_| "bad error marker")?),
                ),
                _ => (
                    TurnKind::Clarification,
                    Some(marker[4].parse::<u32>().map_err(|_| "bad clarify marker")?),
                ),
            };
            let text = MARKER.replace(&full, "").trim().to_string();
            if text.is_empty() {
                return Err("USER line with empty text".into());
            }
            pending = Some((kind, ordinal, text));
        } else if let Some(caps) = EXPERT_LINE.captures(line) {
            let (kind, step_ordinal, user_text) =
                pending.take().ok_or("EXPERT line without a preceding USER line")?;
            let expert_text = caps[1].trim().to_string();
            if expert_text.is_empty() {
                return Err("EXPERT line with empty text".into());
            }
            turns.push(DialogueTurn {
                index: turns.len() as u32 + 1,
                kind,
                user_text,
                expert_text,
                span: None,
                step_ordinal,
            });
        } else {
            return Err(format!("unrecognized script line: {line:?}"));
        }
    }
    if pending.is_some() {
        return Err("dangling USER line at end of script".into());
    }
    if turns.is_empty() {
        return Err("script contains no turns".into());
    }
    Ok(turns)
}

fn missing_or_duplicated(turns: &[DialogueTurn], set: &InstructionSet) -> Vec<u32> {
    let mut problems = Vec::new();
    for step in &set.steps {
        let count = turns
            .iter()
            .filter(|t| t.kind == TurnKind::Step && t.step_ordinal == Some(step.ordinal))
            .count();
        if count != 1 {
            problems.push(step.ordinal);
        }
    }
    problems
}

// --- generation ------------------------------------------------------------------

/// Generates a conversation covering every instruction step once, in order.
/// Error mode requires correction steps and yields error-report turns; one
/// regeneration attempt covers occasional step drop-outs at high sampling
/// temperature.
pub fn generate(
    set: &InstructionSet,
    style: SpeechStyle,
    action_type: ActionType,
    correction_token: &str,
    llm: &LlmContext<'_>,
) -> Result<Conversation, DialogueError> {
    if action_type == ActionType::Error && !set.has_corrections() {
        return Err(DialogueError::NoCorrectionSteps);
    }

    // Correction markers only appear in error mode; follow mode renders the
    // same steps as an ordinary list.
    let steps_text = match action_type {
        ActionType::Error => mark_corrections(set, correction_token)?,
        ActionType::Follow => plain_step_list(set),
    };

    let variables = vars([
        ("task", set.task.as_str()),
        ("steps", steps_text.as_str()),
        ("style_hint", style.hint()),
        ("correction_token", correction_token),
    ]);
    let completion = llm.complete_template("dialogue_generate", &variables)?;

    let turns = match parse_script(&completion.text) {
        Ok(turns) if missing_or_duplicated(&turns, set).is_empty() => turns,
        first_attempt => {
            let missing = match &first_attempt {
                Ok(turns) => missing_or_duplicated(turns, set),
                Err(_) => set.steps.iter().map(|s| s.ordinal).collect(),
            };
            let missing_text = missing
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(", ");
            let mut retry_vars = variables.clone();
            retry_vars.insert("missing".into(), missing_text);
            let retry = llm.complete_template("dialogue_regenerate", &retry_vars)?;
            match parse_script(&retry.text) {
                Ok(turns) => {
                    let still_missing = missing_or_duplicated(&turns, set);
                    if !still_missing.is_empty() {
                        return Err(DialogueError::CoverageFailure {
                            missing: still_missing,
                        });
                    }
                    turns
                }
                Err(reason) => {
                    if first_attempt.is_err() {
                        return Err(DialogueError::UnparseableCompletion(reason));
                    }
                    return Err(DialogueError::CoverageFailure { missing });
                }
            }
        }
    };

    let mut conversation = Conversation {
        task: set.task.clone(),
        style,
        action_type,
        source_recording_id: set.recording_id.clone(),
        turns,
    };
    conversation.renumber();
    Ok(conversation)
}

/// Builds one clarification turn per step caveat. The turns are positioned
/// by `step_ordinal`; [`insert_clarifications`] splices them in directly
/// after their step's turn. Deterministic by construction — caveat content
/// is the answer, so no model call is involved and empty caveats simply
/// yield an empty list.
pub fn generate_clarifications(set: &InstructionSet) -> Vec<DialogueTurn> {
    let mut turns = Vec::new();
    for step in &set.steps {
        for caveat in &step.caveats {
            let cleaned = caveat.trim().trim_end_matches('.');
            turns.push(DialogueTurn {
                index: 0,
                kind: TurnKind::Clarification,
                user_text: "Before I do that — anything I should watch out for?".to_string(),
                expert_text: format!("Good question: {cleaned}."),
                span: None,
                step_ordinal: Some(step.ordinal),
            });
        }
    }
    turns
}

/// Splices clarification turns in after their parent step turns and
/// renumbers the conversation.
pub fn insert_clarifications(conversation: &mut Conversation, clarifications: Vec<DialogueTurn>) {
    for clarification in clarifications {
        let anchor = conversation.turns.iter().position(|t| {
            t.kind == TurnKind::Step && t.step_ordinal == clarification.step_ordinal
        });
        let at = match anchor {
            Some(i) => {
                // After the step turn and any clarifications already added
                // for it.
                let mut insert_at = i + 1;
                while insert_at < conversation.turns.len()
                    && conversation.turns[insert_at].kind == TurnKind::Clarification
                    && conversation.turns[insert_at].step_ordinal == clarification.step_ordinal
                {
                    insert_at += 1;
                }
                insert_at
            }
            None => conversation.turns.len(),
        };
        conversation.turns.insert(at, clarification);
    }
    conversation.renumber();
}
