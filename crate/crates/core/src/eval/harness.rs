//! Inference over the benchmark split with teacher forcing: ground-truth
//! history is fed at every turn, so one bad response never cascades into the
//! next prompt.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::dataset::Session;
use crate::instruction::plain_step_list;
use crate::llm::{vars, LlmContext, PromptRequest};

use super::{
    sentence_bleu_smoothed, rouge_l, rouge_n, EvalError, MetricRecord, PredictedResponse,
    PromptMode,
};

/// Role-tagged conversation history up to and including the target turn's
/// user side.
pub fn history_text(session: &Session, turn_index: u32) -> String {
    let mut out = String::new();
    for turn in &session.conversation.turns {
        if turn.index < turn_index {
            out.push_str(&format!("User: {}\nExpert: {}\n", turn.user_text, turn.expert_text));
        } else if turn.index == turn_index {
            out.push_str(&format!("User: {}\n", turn.user_text));
            break;
        }
    }
    out
}

/// Builds the inference request for one turn. The system prompt carries the
/// task-assistant hint, plus the full instruction list in hint+steps mode;
/// the user prompt is the teacher-forced history.
pub fn build_prompt(
    session: &Session,
    turn_index: u32,
    mode: PromptMode,
    llm: &LlmContext<'_>,
) -> Result<PromptRequest, EvalError> {
    let turns = session.conversation.turns.len();
    if turn_index == 0 || turn_index as usize > turns {
        return Err(EvalError::BadTurnIndex {
            session_id: session.session_id.clone(),
            turn_index,
            turns,
        });
    }
    let system_text = match mode {
        PromptMode::HintOnly => llm
            .templates
            .render("eval_hint", &vars([("task", session.task.as_str())])),
        PromptMode::HintPlusSteps => {
            let steps = plain_step_list(&session.instruction_set);
            llm.templates.render(
                "eval_hint_steps",
                &vars([("task", session.task.as_str()), ("steps", steps.as_str())]),
            )
        }
    }
    .map_err(crate::llm::LlmError::from)?;

    Ok(PromptRequest {
        model_id: llm.options.model_id.clone(),
        system_text,
        user_text: history_text(session, turn_index),
        temperature: llm.options.temperature,
        max_output_tokens: llm.options.max_output_tokens,
    })
}

/// A turn whose completion failed; recorded instead of aborting the run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InferenceFailure {
    pub session_id: String,
    pub turn_index: u32,
    pub message: String,
}

/// Runs the candidate model over every turn of every given session,
/// returning one prediction per (session, turn) plus per-turn failure
/// records.
pub fn run_inference(
    sessions: &[Session],
    mode: PromptMode,
    llm: &LlmContext<'_>,
) -> (Vec<PredictedResponse>, Vec<InferenceFailure>) {
    let mut predictions = Vec::new();
    let mut failures = Vec::new();
    for session in sessions {
        for turn in &session.conversation.turns {
            let request = match build_prompt(session, turn.index, mode, llm) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(InferenceFailure {
                        session_id: session.session_id.clone(),
                        turn_index: turn.index,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            match llm.client.complete(&request) {
                Ok(completion) => predictions.push(PredictedResponse {
                    session_id: session.session_id.clone(),
                    turn_index: turn.index,
                    mode,
                    text: completion.text.trim().to_string(),
                }),
                Err(e) => failures.push(InferenceFailure {
                    session_id: session.session_id.clone(),
                    turn_index: turn.index,
                    message: e.to_string(),
                }),
            }
        }
    }
    (predictions, failures)
}

/// Scores predictions against the reference expert texts: smoothed per-turn
/// BLEU plus ROUGE-1/2/L F1.
pub fn score_predictions(
    predictions: &[PredictedResponse],
    sessions: &[Session],
) -> Result<Vec<MetricRecord>, EvalError> {
    let by_id: std::collections::BTreeMap<&str, &Session> = sessions
        .iter()
        .map(|s| (s.session_id.as_str(), s))
        .collect();
    let mut records = Vec::with_capacity(predictions.len());
    for prediction in predictions {
        let session = by_id
            .get(prediction.session_id.as_str())
            .ok_or_else(|| EvalError::UnknownSession(prediction.session_id.clone()))?;
        let reference = session
            .conversation
            .turns
            .iter()
            .find(|t| t.index == prediction.turn_index)
            .map(|t| t.expert_text.as_str())
            .ok_or(EvalError::BadTurnIndex {
                session_id: prediction.session_id.clone(),
                turn_index: prediction.turn_index,
                turns: session.conversation.turns.len(),
            })?;
        records.push(MetricRecord {
            session_id: prediction.session_id.clone(),
            turn_index: prediction.turn_index,
            mode: prediction.mode,
            bleu: sentence_bleu_smoothed(&prediction.text, reference),
            rouge1: rouge_n(&prediction.text, reference, 1).f1,
            rouge2: rouge_n(&prediction.text, reference, 2).f1,
            rouge_l: rouge_l(&prediction.text, reference).f1,
            judge: None,
        });
    }
    Ok(records)
}

pub fn write_predictions(
    predictions: &[PredictedResponse],
    path: &Path,
) -> Result<(), EvalError> {
    let io_err = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    for prediction in predictions {
        writeln!(file, "{}", serde_json::to_string(prediction).expect("serializes")).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictedResponse>, EvalError> {
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut predictions = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        predictions.push(serde_json::from_str(&line).map_err(|e| EvalError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)),
        })?);
    }
    Ok(predictions)
}
