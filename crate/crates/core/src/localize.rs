//! Stage 3: assign source-video time spans to instruction steps and
//! dialogue turns, emit clip cut-lists for an external clipping tool, and
//! score predicted segmentations against ground truth.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{Conversation, TurnKind};
use crate::ingest::{StepAnnotation, SubtitleEntry};
use crate::instruction::{InstructionSet, Provenance};
use crate::time::{format_seconds, TimeSpan};

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error("step {ordinal} references source index {reference} outside 1..={available}")]
    DanglingSourceRef {
        ordinal: u32,
        reference: u32,
        available: usize,
    },
    #[error("no step carries subtitle references; nothing to localize")]
    NoLocalizableSteps,
    #[error("span map is missing step ordinal {0}")]
    MissingSpan(u32),
    #[error("ground-truth span map is empty")]
    EmptyTruth,
    #[error("localize_direct needs an annotation-derived set, got {0:?}")]
    WrongProvenance(Provenance),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Step ordinal → time span for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpanMap {
    pub recording_id: String,
    pub entries: BTreeMap<u32, TimeSpan>,
}

impl StepSpanMap {
    pub fn get(&self, ordinal: u32) -> Option<TimeSpan> {
        self.entries.get(&ordinal).copied()
    }
}

/// Direct localization for annotation-derived sets: each step's span is the
/// hull of its referenced annotations' spans.
pub fn localize_direct(
    set: &InstructionSet,
    annotations: &[StepAnnotation],
) -> Result<StepSpanMap, LocalizeError> {
    if set.provenance == Provenance::NarrationLlm {
        return Err(LocalizeError::WrongProvenance(set.provenance));
    }
    let mut entries = BTreeMap::new();
    for step in &set.steps {
        let mut hull: Option<TimeSpan> = None;
        for &reference in &step.source_refs {
            let annotation = annotations
                .get(reference as usize - 1)
                .filter(|_| reference >= 1)
                .ok_or(LocalizeError::DanglingSourceRef {
                    ordinal: step.ordinal,
                    reference,
                    available: annotations.len(),
                })?;
            hull = Some(match hull {
                Some(h) => h.hull(&annotation.span),
                None => annotation.span,
            });
        }
        if let Some(span) = hull {
            entries.insert(step.ordinal, span);
        }
    }
    Ok(StepSpanMap {
        recording_id: set.recording_id.clone(),
        entries,
    })
}

/// Subtitle-timestamp localization for narration-derived sets: a step spans
/// from the start of its first referenced cue to the end of its last.
/// Reference-less steps inherit the gap between their neighbors' spans
/// (recording start and end at the boundaries).
pub fn localize_from_subtitles(
    set: &InstructionSet,
    subtitles: &[SubtitleEntry],
    recording_duration_s: f64,
) -> Result<StepSpanMap, LocalizeError> {
    let mut resolved: Vec<Option<TimeSpan>> = Vec::with_capacity(set.steps.len());
    for step in &set.steps {
        let mut hull: Option<TimeSpan> = None;
        for &reference in &step.source_refs {
            let cue = subtitles
                .get(reference as usize - 1)
                .filter(|_| reference >= 1)
                .ok_or(LocalizeError::DanglingSourceRef {
                    ordinal: step.ordinal,
                    reference,
                    available: subtitles.len(),
                })?;
            hull = Some(match hull {
                Some(h) => h.hull(&cue.span),
                None => cue.span,
            });
        }
        resolved.push(hull);
    }
    if resolved.iter().all(Option::is_none) {
        return Err(LocalizeError::NoLocalizableSteps);
    }

    // Gap-fill: a ref-less step gets the interval between the previous
    // resolved span's end and the next resolved span's start.
    let mut entries = BTreeMap::new();
    for (i, span) in resolved.iter().enumerate() {
        let span = match span {
            Some(s) => *s,
            None => {
                let prev_end = resolved[..i]
                    .iter()
                    .rev()
                    .flatten()
                    .next()
                    .map(|s| s.end_s)
                    .unwrap_or(0.0);
                let next_start = resolved[i + 1..]
                    .iter()
                    .flatten()
                    .next()
                    .map(|s| s.start_s)
                    .unwrap_or(recording_duration_s);
                match TimeSpan::new(prev_end, next_start) {
                    Ok(gap) => gap,
                    // Degenerate gap (neighbors touch): reuse the boundary
                    // instant stretched by a millisecond so the turn still
                    // carries a clip.
                    Err(_) => TimeSpan {
                        start_s: prev_end,
                        end_s: prev_end + 0.001,
                    },
                }
            }
        };
        entries.insert(set.steps[i].ordinal, span);
    }
    Ok(StepSpanMap {
        recording_id: set.recording_id.clone(),
        entries,
    })
}

/// Copies spans onto a conversation's turns: step turns take their step's
/// span, the opening turn takes the pre-first-step interval when non-empty,
/// and clarification/error turns inherit their step's span.
pub fn attach_clips(
    conversation: &Conversation,
    map: &StepSpanMap,
) -> Result<Conversation, LocalizeError> {
    for turn in conversation.step_turns() {
        let ordinal = turn.step_ordinal.unwrap_or(0);
        if map.get(ordinal).is_none() {
            return Err(LocalizeError::MissingSpan(ordinal));
        }
    }
    let first_start = map.entries.values().next().map(|s| s.start_s);

    let mut updated = conversation.clone();
    for turn in &mut updated.turns {
        turn.span = match turn.kind {
            TurnKind::Step | TurnKind::Clarification | TurnKind::ErrorReport => {
                turn.step_ordinal.and_then(|o| map.get(o))
            }
            TurnKind::TaskInit => {
                first_start.and_then(|start| TimeSpan::new(0.0, start).ok())
            }
            TurnKind::Closing => None,
        };
    }
    Ok(updated)
}

/// Writes a cut-list CSV (`recording_id,start_s,end_s,clip_filename`) with
/// one row per span-bearing turn, for an external clipping tool. Clip file
/// names are deterministic in (session id, turn index).
pub fn emit_cutlist<'a>(
    sessions: impl IntoIterator<Item = &'a crate::dataset::Session>,
    output_path: &Path,
) -> Result<PathBuf, LocalizeError> {
    let io_err = |source| LocalizeError::Io {
        path: output_path.display().to_string(),
        source,
    };
    let mut out = String::from("recording_id,start_s,end_s,clip_filename\n");
    for session in sessions {
        for turn in &session.conversation.turns {
            if let Some(span) = turn.span {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    session.source_recording_id,
                    format_seconds(span.start_s),
                    format_seconds(span.end_s),
                    clip_filename(&session.session_id, turn.index),
                ));
            }
        }
    }
    let mut file = std::fs::File::create(output_path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)?;
    Ok(output_path.to_path_buf())
}

pub fn clip_filename(session_id: &str, turn_index: u32) -> String {
    format!("{session_id}_t{turn_index:02}.mp4")
}

// --- segmentation scoring ------------------------------------------------------

/// Frame-wise segmentation quality at a fixed time resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScore {
    pub mean_iou: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub per_step_iou: BTreeMap<u32, f64>,
    /// True when the prediction contained no non-background cells, in which
    /// case `precision` is reported as 0 by convention.
    pub precision_undefined: bool,
}

/// Scores a predicted step segmentation against ground truth by
/// discretizing the timeline into `duration/resolution` cells. Each cell is
/// labeled by the step whose span contains its midpoint (later ordinals win
/// overlaps; unclaimed cells are background). Per-step IoU is
/// intersection/union over cells; mean IoU averages over the step ordinals
/// present in the truth map (macro averaging).
pub fn score_segmentation(
    predicted: &StepSpanMap,
    truth: &StepSpanMap,
    duration_s: f64,
    resolution_s: f64,
) -> Result<SegmentationScore, LocalizeError> {
    if truth.entries.is_empty() {
        return Err(LocalizeError::EmptyTruth);
    }
    assert!(resolution_s > 0.0, "resolution must be positive");
    let cells = (duration_s / resolution_s).round().max(1.0) as usize;

    let label_cells = |map: &StepSpanMap| -> Vec<Option<u32>> {
        let mut labels = vec![None; cells];
        for (&ordinal, span) in &map.entries {
            for (i, label) in labels.iter_mut().enumerate() {
                let midpoint = (i as f64 + 0.5) * resolution_s;
                if midpoint >= span.start_s && midpoint < span.end_s {
                    *label = Some(ordinal);
                }
            }
        }
        labels
    };
    let truth_cells = label_cells(truth);
    let predicted_cells = label_cells(predicted);

    let mut per_step_iou = BTreeMap::new();
    for &ordinal in truth.entries.keys() {
        let mut intersection = 0usize;
        let mut union = 0usize;
        for (t, p) in truth_cells.iter().zip(&predicted_cells) {
            let in_truth = *t == Some(ordinal);
            let in_predicted = *p == Some(ordinal);
            if in_truth && in_predicted {
                intersection += 1;
            }
            if in_truth || in_predicted {
                union += 1;
            }
        }
        per_step_iou.insert(
            ordinal,
            if union == 0 {
                0.0
            } else {
                intersection as f64 / union as f64
            },
        );
    }
    let mean_iou = per_step_iou.values().sum::<f64>() / per_step_iou.len() as f64;

    let mut correct_cells = 0usize;
    let mut predicted_foreground = 0usize;
    let mut correct_foreground = 0usize;
    for (t, p) in truth_cells.iter().zip(&predicted_cells) {
        if t == p {
            correct_cells += 1;
        }
        if p.is_some() {
            predicted_foreground += 1;
            if t == p {
                correct_foreground += 1;
            }
        }
    }
    let precision_undefined = predicted_foreground == 0;
    let precision = if precision_undefined {
        0.0
    } else {
        correct_foreground as f64 / predicted_foreground as f64
    };
    let accuracy = correct_cells as f64 / cells as f64;

    Ok(SegmentationScore {
        mean_iou,
        precision,
        accuracy,
        per_step_iou,
        precision_undefined,
    })
}
