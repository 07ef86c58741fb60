//! LLM-as-judge scoring: a (typically larger) model grades each candidate
//! response 1–5 with a rationale, anchored on the reference expert response.

use once_cell::sync::Lazy;
use regex::Regex;

use crate::dataset::Session;
use crate::llm::{vars, LlmContext};

use super::{harness::history_text, EvalError, MetricRecord, PredictedResponse};

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeVerdict {
    pub score: u8,
    pub rationale: String,
}

static INTEGER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(\d+)\b").unwrap());

/// The score is the last standalone integer in the completion; anything
/// outside 1–5 (or no integer at all) is unparseable.
fn parse_score(completion: &str) -> Option<u8> {
    let last = INTEGER
        .captures_iter(completion)
        .last()?
        .get(1)?
        .as_str()
        .parse::<u64>()
        .ok()?;
    if (1..=5).contains(&last) {
        Some(last as u8)
    } else {
        None
    }
}

/// Grades one prediction against its reference turn. An unparseable
/// completion triggers one stricter re-ask before failing.
pub fn judge(
    session: &Session,
    turn_index: u32,
    prediction: &str,
    llm: &LlmContext<'_>,
) -> Result<JudgeVerdict, EvalError> {
    let reference = session
        .conversation
        .turns
        .iter()
        .find(|t| t.index == turn_index)
        .map(|t| t.expert_text.as_str())
        .ok_or(EvalError::BadTurnIndex {
            session_id: session.session_id.clone(),
            turn_index,
            turns: session.conversation.turns.len(),
        })?;
    let history = history_text(session, turn_index);
    let variables = vars([
        ("task", session.task.as_str()),
        ("history", history.as_str()),
        ("reference", reference),
        ("candidate", prediction),
    ]);

    let completion = llm.complete_template("judge", &variables)?;
    if let Some(score) = parse_score(&completion.text) {
        return Ok(JudgeVerdict {
            score,
            rationale: completion.text,
        });
    }
    let retry = llm.complete_template("judge_retry", &variables)?;
    match parse_score(&retry.text) {
        Some(score) => Ok(JudgeVerdict {
            score,
            rationale: retry.text,
        }),
        None => Err(EvalError::UnparseableScore {
            completion: retry.text,
        }),
    }
}

/// Fills the `judge` column of existing metric records. Failures are
/// collected per turn rather than aborting the run.
pub fn judge_predictions(
    records: &mut [MetricRecord],
    predictions: &[PredictedResponse],
    sessions: &[Session],
    llm: &LlmContext<'_>,
) -> Vec<super::harness::InferenceFailure> {
    let by_id: std::collections::BTreeMap<&str, &Session> = sessions
        .iter()
        .map(|s| (s.session_id.as_str(), s))
        .collect();
    let by_key: std::collections::BTreeMap<(String, u32), &PredictedResponse> = predictions
        .iter()
        .map(|p| ((p.session_id.clone(), p.turn_index), p))
        .collect();

    let mut failures = Vec::new();
    for record in records.iter_mut() {
        let (Some(session), Some(prediction)) = (
            by_id.get(record.session_id.as_str()),
            by_key.get(&(record.session_id.clone(), record.turn_index)),
        ) else {
            continue;
        };
        match judge(session, record.turn_index, &prediction.text, llm) {
            Ok(verdict) => record.judge = Some(verdict.score),
            Err(e) => failures.push(super::harness::InferenceFailure {
                session_id: record.session_id.clone(),
                turn_index: record.turn_index,
                message: e.to_string(),
            }),
        }
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::testkit::mini_session;
    use crate::dialogue::{ActionType, SpeechStyle};
    use crate::llm::{ChatOptions, LlmClient, ScriptedTransport, TemplateStore};
    use crate::testutil::QueueTransport;
    use std::sync::Arc;

    fn llm_over<'a>(client: &'a LlmClient, templates: &'a TemplateStore) -> LlmContext<'a> {
        LlmContext {
            client,
            templates,
            options: ChatOptions::inference("judge-model"),
        }
    }

    #[test]
    fn score_extraction_rules() {
        assert_eq!(parse_score("…matches the reference step. Score: 4"), Some(4));
        assert_eq!(parse_score("covers 12 of 19 words. Score: 3"), Some(3));
        assert_eq!(parse_score("no digits here"), None);
        assert_eq!(parse_score("Score: 7"), None);
        assert_eq!(parse_score("Score: 0"), None);
    }

    #[test]
    fn matching_candidate_scores_high() {
        let session = mini_session("r1", "making tea", SpeechStyle::Regular, ActionType::Follow);
        let client = crate::testutil::scripted_live(Arc::new(ScriptedTransport::new()));
        let templates = TemplateStore::builtin();
        let reference = session.conversation.turns[1].expert_text.clone();
        let verdict = judge(&session, 2, &reference, &llm_over(&client, &templates)).unwrap();
        assert_eq!(verdict.score, 5);
        assert!(!verdict.rationale.is_empty());
    }

    #[test]
    fn scoreless_completion_reasks_once_then_succeeds() {
        let session = mini_session("r1", "making tea", SpeechStyle::Regular, ActionType::Follow);
        let client = crate::testutil::scripted_live(Arc::new(QueueTransport::new(vec![
            "this judge rambles with no verdict".to_string(),
            "Score: 3".to_string(),
        ])));
        let templates = TemplateStore::builtin();
        let verdict = judge(&session, 2, "whatever", &llm_over(&client, &templates)).unwrap();
        assert_eq!(verdict.score, 3);
    }

    #[test]
    fn out_of_range_score_fails_after_reask() {
        let session = mini_session("r1", "making tea", SpeechStyle::Regular, ActionType::Follow);
        let client = crate::testutil::scripted_live(Arc::new(QueueTransport::new(vec![
            "Score: 7".to_string(),
            "Score: 9".to_string(),
        ])));
        let templates = TemplateStore::builtin();
        let err = judge(&session, 2, "whatever", &llm_over(&client, &templates)).unwrap_err();
        assert!(matches!(err, EvalError::UnparseableScore { .. }));
    }
}
