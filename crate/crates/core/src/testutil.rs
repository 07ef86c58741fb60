//! Shared helpers for unit tests.

use std::sync::{Arc, Mutex};

use crate::llm::{Endpoint, LiveConfig, LlmClient, RetryPolicy, Transport, TransportError};

/// Transport that replays a fixed queue of completion texts in order.
pub struct QueueTransport {
    responses: Mutex<std::collections::VecDeque<String>>,
}

impl QueueTransport {
    pub fn new(responses: Vec<String>) -> Self {
        QueueTransport {
            responses: Mutex::new(responses.into()),
        }
    }
}

impl Transport for QueueTransport {
    fn post_chat(
        &self,
        _endpoint: &Endpoint,
        _body: &serde_json::Value,
    ) -> Result<String, TransportError> {
        let text = self
            .responses
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| "queue exhausted".to_string());
        Ok(serde_json::json!({
            "choices": [{"message": {"content": text}, "finish_reason": "stop"}]
        })
        .to_string())
    }
}

/// Live client over an injected transport, with retries configured for
/// speed.
pub fn scripted_live(transport: Arc<dyn Transport>) -> LlmClient {
    let mut config = LiveConfig::new(Endpoint {
        url: "scripted://local".into(),
        api_key: String::new(),
    });
    config.retry = RetryPolicy {
        max_retries: 1,
        base_delay_ms: 0,
        max_delay_ms: 0,
    };
    LlmClient::live(transport, config)
}
