//! stepdial-core: a batch pipeline that turns single-narrator
//! instructional-video metadata into expert–novice task-assistance
//! dialogues aligned with per-step video time spans, plus the benchmark
//! harness (BLEU, ROUGE, LLM-as-judge, temporal segmentation scoring) used
//! to evaluate assistant models on the resulting dataset.
//!
//! Pipeline stages:
//! 1. [`ingest`] — parse subtitle transcripts, step annotations, and
//!    recording manifests into validated records.
//! 2. [`instruction`] — produce an atomic instruction set per recording
//!    (LLM extraction from narration, or merge/cluster paths for
//!    annotations).
//! 3. [`dialogue`] — convert instruction sets into multi-turn user–expert
//!    conversations with controllable speech style and error behavior.
//! 4. [`localize`] — assign video time spans to steps and turns, emit clip
//!    cut-lists, and score predicted segmentations.
//! 5. [`dataset`] — assemble sessions, split them per stratum, compute
//!    corpus statistics, and serialize JSON Lines.
//! 6. [`eval`] — run a candidate model over the test split and aggregate
//!    BLEU/ROUGE/judge scores by task, category, and turn index.
//!
//! All LLM access goes through [`llm`], which supports live endpoints plus
//! deterministic record/replay cassettes for offline runs.

pub mod dataset;
pub mod dialogue;
pub mod eval;
pub mod ingest;
pub mod instruction;
pub mod llm;
pub mod localize;
pub mod plot;
pub mod time;

#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::{
    assemble, compute_stats, read_dataset, session_id, stratified_split, write_dataset,
    write_stats_report, DatasetError, Session, Split, SplitAssignment, SplitRatios, StatsReport,
};
pub use dialogue::{
    generate, generate_clarifications, insert_clarifications, validate, ActionType, Conversation,
    DialogueError, DialogueTurn, SpeechStyle, TurnKind, ValidationReport,
};
pub use eval::{
    aggregate, build_prompt, judge, run_inference, score_predictions, EvalError, MetricRecord,
    PredictedResponse, PromptMode, ReportTables,
};
pub use ingest::{
    load_manifest, parse_step_annotation_file, parse_subtitle_file, select_error_recordings,
    validate_timeline, ErrorLabel, IngestError, SourceKind, SourceRecording, StepAnnotation,
    SubtitleEntry, SubtitleFormat, TimelineReport,
};
pub use instruction::{
    cluster_and_filter_steps, extract_from_narration, mark_corrections, normalize_annotated_steps,
    InstructionError, InstructionSet, InstructionStep, Provenance, Stoplist,
    DEFAULT_CORRECTION_TOKEN,
};
pub use llm::{
    Cassette, ChatOptions, Completion, Endpoint, FinishReason, HttpTransport, LiveConfig,
    LlmClient, LlmContext, LlmError, PromptRequest, RetryPolicy, ScriptedTransport, TemplateStore,
    Transport,
};
pub use localize::{
    attach_clips, emit_cutlist, localize_direct, localize_from_subtitles, score_segmentation,
    LocalizeError, SegmentationScore, StepSpanMap,
};
pub use time::{TimeSpan, SpanError};
