//! Wire schema and HTTP transport for chat-completion endpoints.
//!
//! The request body is the minimal `{model, messages, temperature,
//! max_tokens}` shape; the response parser accepts the common variants of
//! the completion payload so one adapter covers generically-served models.

use std::time::Duration;

use serde_json::{json, Value};

use super::{FinishReason, LlmError, PromptRequest};

/// Environment variables consulted by [`Endpoint::from_env`].
pub const ENDPOINT_ENV: &str = "STEPDIAL_LLM_ENDPOINT";
pub const API_KEY_ENV: &str = "STEPDIAL_LLM_API_KEY";
pub const MODEL_ENV: &str = "STEPDIAL_LLM_MODEL";

#[derive(Debug, Clone)]
pub struct Endpoint {
    pub url: String,
    pub api_key: String,
}

impl Endpoint {
    pub fn from_env() -> Result<Endpoint, LlmError> {
        let url = std::env::var(ENDPOINT_ENV)
            .map_err(|_| LlmError::MissingConfig(format!("{ENDPOINT_ENV} not set")))?;
        let api_key = std::env::var(API_KEY_ENV).unwrap_or_default();
        Ok(Endpoint { url, api_key })
    }
}

/// Default model id when the run configuration does not name one.
pub fn model_from_env() -> Option<String> {
    std::env::var(MODEL_ENV).ok()
}

#[derive(Debug)]
pub struct TransportError {
    pub retryable: bool,
    pub message: String,
}

/// Pluggable request sender. Tests inject failing or scripted transports;
/// production uses [`HttpTransport`].
pub trait Transport: Send + Sync {
    fn post_chat(&self, endpoint: &Endpoint, body: &Value) -> Result<String, TransportError>;
}

pub fn build_chat_body(request: &PromptRequest) -> Value {
    json!({
        "model": request.model_id,
        "messages": [
            {"role": "system", "content": request.system_text},
            {"role": "user", "content": request.user_text},
        ],
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
    })
}

/// Extracts completion text and finish reason from a response payload.
/// Accepts `choices[0].message.content` (string or text-part array) and the
/// older `choices[0].text` form.
pub fn parse_chat_response(body: &str) -> Result<(String, FinishReason), String> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    let choice = value
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| "response has no choices".to_string())?;

    let text = if let Some(content) = choice.pointer("/message/content") {
        match content {
            Value::String(s) => s.clone(),
            Value::Array(parts) => parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
            other => return Err(format!("unsupported content shape: {other}")),
        }
    } else if let Some(text) = choice.get("text").and_then(Value::as_str) {
        text.to_string()
    } else {
        return Err("choice has neither message.content nor text".to_string());
    };

    let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("length") | Some("max_tokens") => FinishReason::Length,
        Some("error") => FinishReason::Error,
        _ => FinishReason::Stop,
    };
    Ok((text, finish_reason))
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::MissingConfig(format!("http client: {e}")))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn post_chat(&self, endpoint: &Endpoint, body: &Value) -> Result<String, TransportError> {
        let mut request = self
            .client
            .post(&endpoint.url)
            .header("Content-Type", "application/json");
        if !endpoint.api_key.is_empty() {
            request = request.header("Authorization", format!("Bearer {}", endpoint.api_key));
        }
        let response = request.json(body).send().map_err(|e| TransportError {
            retryable: e.is_timeout() || e.is_connect() || e.is_request(),
            message: e.to_string(),
        })?;

        let status = response.status();
        let text = response.text().map_err(|e| TransportError {
            retryable: true,
            message: format!("reading response body: {e}"),
        })?;
        if status.is_success() {
            Ok(text)
        } else {
            Err(TransportError {
                retryable: matches!(status.as_u16(), 408 | 429 | 500 | 502 | 503 | 504),
                message: format!("status {status}: {text}"),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_body_shape() {
        let body = build_chat_body(&PromptRequest {
            model_id: "m".into(),
            system_text: "s".into(),
            user_text: "u".into(),
            temperature: 1.5,
            max_output_tokens: 8,
        });
        assert_eq!(body["model"], "m");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "u");
        assert_eq!(body["temperature"], 1.5);
        assert_eq!(body["max_tokens"], 8);
    }

    #[test]
    fn parses_message_content_string() {
        let body = r#"{"choices":[{"message":{"content":"hello"},"finish_reason":"stop"}]}"#;
        assert_eq!(
            parse_chat_response(body).unwrap(),
            ("hello".to_string(), FinishReason::Stop)
        );
    }

    #[test]
    fn parses_content_parts_and_length_reason() {
        let body = r#"{"choices":[{"message":{"content":[{"text":"a"},{"text":"b"}]},"finish_reason":"length"}]}"#;
        assert_eq!(
            parse_chat_response(body).unwrap(),
            ("ab".to_string(), FinishReason::Length)
        );
    }

    #[test]
    fn parses_legacy_text_field() {
        let body = r#"{"choices":[{"text":"legacy"}]}"#;
        assert_eq!(parse_chat_response(body).unwrap().0, "legacy");
    }

    #[test]
    fn rejects_malformed_payloads() {
        assert!(parse_chat_response("not json").is_err());
        assert!(parse_chat_response(r#"{"choices":[]}"#).is_err());
        assert!(parse_chat_response(r#"{"choices":[{}]}"#).is_err());
    }
}
