//! Benchmark harness: prompt construction, inference over the test split,
//! text metrics, LLM-as-judge scoring, and report aggregation.

pub mod aggregate;
pub mod harness;
pub mod judge;
pub mod metrics;

pub use aggregate::{aggregate, write_report_tables, MetricMeans, ReportTables};
pub use harness::{
    build_prompt, read_predictions, run_inference, score_predictions, write_predictions,
    InferenceFailure,
};
pub use judge::{judge, judge_predictions, JudgeVerdict};
pub use metrics::{bleu, rouge_l, rouge_n, sentence_bleu_smoothed, tokenize, MetricError, Prf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::LlmError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("turn index {turn_index} outside 1..={turns} for session {session_id}")]
    BadTurnIndex {
        session_id: String,
        turn_index: u32,
        turns: usize,
    },
    #[error("prediction references unknown session {0}")]
    UnknownSession(String),
    #[error("judge completion has no usable 1-5 score: {completion:?}")]
    UnparseableScore { completion: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Benchmark prompt configurations: with or without the instruction list in
/// the system prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    HintOnly,
    HintPlusSteps,
}

impl PromptMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptMode::HintOnly => "hint_only",
            PromptMode::HintPlusSteps => "hint_plus_steps",
        }
    }

    pub fn parse(s: &str) -> Option<PromptMode> {
        match s {
            "hint_only" => Some(PromptMode::HintOnly),
            "hint_plus_steps" => Some(PromptMode::HintPlusSteps),
            _ => None,
        }
    }
}

/// One model response for one conversation turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedResponse {
    pub session_id: String,
    pub turn_index: u32,
    pub mode: PromptMode,
    pub text: String,
}

/// Per-turn metric values; `judge` stays empty until the judging pass runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub session_id: String,
    pub turn_index: u32,
    pub mode: PromptMode,
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub judge: Option<u8>,
}
