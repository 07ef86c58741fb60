//! Parsing and validation of source-recording metadata: subtitle transcripts,
//! step annotations, and recording manifests.

mod annotation;
mod manifest;
mod subtitle;

pub use annotation::{annotations_to_csv, parse_step_annotation_file};
pub use manifest::load_manifest;
pub use subtitle::{parse_subtitle_file, subtitles_to_srt, subtitles_to_vtt, SubtitleFormat};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::TimeSpan;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed timestamp at line {line}: {content:?}")]
    MalformedTimestamp { line: usize, content: String },
    #[error("transcript contains no cues")]
    EmptyTranscript,
    #[error("content is not valid UTF-8")]
    InvalidEncoding,
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("unknown error label {label:?} at row {row}")]
    UnknownErrorLabel { row: usize, label: String },
    #[error("missing file: {path}")]
    MissingFile { path: String },
    #[error("duplicate recording id {0:?}")]
    DuplicateRecordingId(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Step-level error taxonomy for annotated recordings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLabel {
    Normal,
    Omission,
    Addition,
    Modification,
    Slip,
    Correction,
}

impl ErrorLabel {
    pub fn parse(s: &str) -> Option<ErrorLabel> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Some(ErrorLabel::Normal),
            "omission" => Some(ErrorLabel::Omission),
            "addition" => Some(ErrorLabel::Addition),
            "modification" => Some(ErrorLabel::Modification),
            "slip" => Some(ErrorLabel::Slip),
            "correction" => Some(ErrorLabel::Correction),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorLabel::Normal => "normal",
            ErrorLabel::Omission => "omission",
            ErrorLabel::Addition => "addition",
            ErrorLabel::Modification => "modification",
            ErrorLabel::Slip => "slip",
            ErrorLabel::Correction => "correction",
        }
    }
}

/// One transcript cue: narration text plus the time span it was spoken over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleEntry {
    pub index: u32,
    pub text: String,
    pub span: TimeSpan,
}

/// One fine-grained step annotation from an annotated recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAnnotation {
    pub description: String,
    pub span: TimeSpan,
    pub error_label: Option<ErrorLabel>,
}

impl StepAnnotation {
    /// True for labels that describe a deviation from the normal procedure.
    pub fn is_deviation(&self) -> bool {
        !matches!(self.error_label, None | Some(ErrorLabel::Normal))
    }

    /// True for the labels that produce corrective instruction steps.
    pub fn is_correction_class(&self) -> bool {
        matches!(
            self.error_label,
            Some(ErrorLabel::Modification) | Some(ErrorLabel::Correction)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Narrated,
    Annotated,
}

/// One instructional video's metadata. Frames themselves are never decoded;
/// only duration and optional frame counts travel through the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecording {
    pub recording_id: String,
    pub task: String,
    pub duration_s: f64,
    pub source_kind: SourceKind,
    pub subtitles: Option<Vec<SubtitleEntry>>,
    pub steps: Option<Vec<StepAnnotation>>,
    pub frame_count: Option<u64>,
    pub egocentric: bool,
}

/// Which curation pool a recording belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pool {
    /// No deviation labels at all (includes narrated recordings).
    Normal,
    /// Deviations present and all of them are modification/correction.
    Error,
    /// Deviations present but at least one falls outside the kept classes.
    Excluded,
}

pub fn classify_recording(recording: &SourceRecording) -> Pool {
    let steps = match &recording.steps {
        Some(s) => s,
        None => return Pool::Normal,
    };
    let mut any_deviation = false;
    for step in steps {
        if step.is_deviation() {
            any_deviation = true;
            if !step.is_correction_class() {
                return Pool::Excluded;
            }
        }
    }
    if any_deviation {
        Pool::Error
    } else {
        Pool::Normal
    }
}

/// Keeps exactly the recordings whose deviations consist of step
/// modifications and step corrections only.
pub fn select_error_recordings(recordings: &[SourceRecording]) -> Vec<SourceRecording> {
    recordings
        .iter()
        .filter(|r| classify_recording(r) == Pool::Error)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimelineViolation {
    SpanExceedsDuration {
        track: String,
        index: usize,
        end_s: f64,
        duration_s: f64,
    },
    NestedSpans {
        track: String,
        outer_index: usize,
        inner_index: usize,
    },
    OutOfOrder {
        track: String,
        index: usize,
    },
}

impl std::fmt::Display for TimelineViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimelineViolation::SpanExceedsDuration {
                track,
                index,
                end_s,
                duration_s,
            } => write!(
                f,
                "{track} {index}: span exceeds duration ({end_s}s > {duration_s}s)"
            ),
            TimelineViolation::NestedSpans {
                track,
                outer_index,
                inner_index,
            } => write!(f, "{track}: nested spans ({outer_index} contains {inner_index})"),
            TimelineViolation::OutOfOrder { track, index } => {
                write!(f, "{track} {index}: start time out of order")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimelineReport {
    pub recording_id: String,
    pub violations: Vec<TimelineViolation>,
}

impl TimelineReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every span on a parsed recording against the recording duration,
/// ordering, and nesting rules. Violations are report entries, never errors.
pub fn validate_timeline(recording: &SourceRecording) -> TimelineReport {
    let mut violations = Vec::new();
    if let Some(subs) = &recording.subtitles {
        let spans: Vec<TimeSpan> = subs.iter().map(|s| s.span).collect();
        check_track("subtitle", &spans, recording.duration_s, &mut violations);
    }
    if let Some(steps) = &recording.steps {
        let spans: Vec<TimeSpan> = steps.iter().map(|s| s.span).collect();
        check_track("step", &spans, recording.duration_s, &mut violations);
    }
    TimelineReport {
        recording_id: recording.recording_id.clone(),
        violations,
    }
}

fn check_track(
    track: &str,
    spans: &[TimeSpan],
    duration_s: f64,
    violations: &mut Vec<TimelineViolation>,
) {
    for (i, span) in spans.iter().enumerate() {
        if span.end_s > duration_s {
            violations.push(TimelineViolation::SpanExceedsDuration {
                track: track.to_string(),
                index: i + 1,
                end_s: span.end_s,
                duration_s,
            });
        }
        if i > 0 && span.start_s < spans[i - 1].start_s {
            violations.push(TimelineViolation::OutOfOrder {
                track: track.to_string(),
                index: i + 1,
            });
        }
        for (j, other) in spans.iter().enumerate() {
            if i != j && span.strictly_contains(other) {
                violations.push(TimelineViolation::NestedSpans {
                    track: track.to_string(),
                    outer_index: i + 1,
                    inner_index: j + 1,
                });
            }
        }
    }
}
