//! Chat-completion access with prompt templating, retries, throttling, and a
//! deterministic record/replay cassette backend for offline runs.

mod cassette;
mod limiter;
mod scripted;
mod template;
mod transport;

pub use cassette::{Cassette, CassetteEntry, CassetteWriter};
pub use limiter::Limiter;
pub use scripted::ScriptedTransport;
pub use template::{vars, TemplateError, TemplateStore};
pub use transport::{
    build_chat_body, model_from_env, parse_chat_response, Endpoint, HttpTransport, Transport,
    TransportError, API_KEY_ENV, ENDPOINT_ENV, MODEL_ENV,
};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid prompt request: {0}")]
    InvalidRequest(String),
    #[error("replay cassette has no entry for fingerprint {0}")]
    CassetteMiss(String),
    #[error("endpoint error after {attempts} attempt(s): {message}")]
    Endpoint { attempts: u32, message: String },
    #[error("cassette {path}: {reason}")]
    InvalidCassette { path: String, reason: String },
    #[error("missing configuration: {0}")]
    MissingConfig(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One chat-completion request: a system prompt, a user prompt, and sampling
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub model_id: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

/// Default sampling temperature for dataset generation.
pub const GENERATION_TEMPERATURE: f64 = 1.5;
/// Default sampling temperature for benchmark inference (greedy).
pub const EVAL_TEMPERATURE: f64 = 0.0;
/// Output budget for whole-conversation generation.
pub const GENERATION_MAX_TOKENS: u32 = 1024;
/// Output budget for single-turn inference.
pub const INFERENCE_MAX_TOKENS: u32 = 256;

impl PromptRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.system_text.trim().is_empty() || self.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt text".into()));
        }
        if !(0.0..=4.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 4]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Stable content hash over every request field. Cassette lookups and
    /// dedup both key on this.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for part in [&self.model_id, &self.system_text, &self.user_text] {
            hasher.update(part.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update(format!("{:?}\u{1f}{}", self.temperature, self.max_output_tokens));
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Short human-readable line stored next to the fingerprint in
    /// cassettes.
    pub fn summary(&self) -> String {
        let mut text: String = self.user_text.split_whitespace().collect::<Vec<_>>().join(" ");
        if text.chars().count() > 96 {
            text = text.chars().take(96).collect::<String>() + "…";
        }
        format!("{} | {}", self.model_id, text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: FinishReason,
    pub request_fingerprint: String,
}

/// Exponential backoff schedule for transient endpoint failures.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 4,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based). Non-decreasing in
    /// `retry` and capped at `max_delay_ms`.
    pub fn backoff_delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

/// Connection settings for live and record modes.
#[derive(Clone)]
pub struct LiveConfig {
    pub endpoint: Endpoint,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    pub requests_per_minute: Option<u32>,
}

impl LiveConfig {
    pub fn new(endpoint: Endpoint) -> Self {
        LiveConfig {
            endpoint,
            retry: RetryPolicy::default(),
            max_in_flight: 4,
            requests_per_minute: None,
        }
    }
}

struct Live {
    transport: Arc<dyn Transport>,
    config: LiveConfig,
    limiter: Limiter,
}

enum Mode {
    Live(Live),
    Replay(Cassette),
    Record {
        live: Live,
        writer: Mutex<CassetteWriter>,
        recorded: Mutex<HashMap<String, Completion>>,
    },
}

/// Shareable chat-completion client. Replay mode never performs network
/// operations; record mode appends every new completion to its cassette.
pub struct LlmClient {
    mode: Mode,
}

impl LlmClient {
    pub fn live(transport: Arc<dyn Transport>, config: LiveConfig) -> Self {
        let limiter = Limiter::new(config.max_in_flight, config.requests_per_minute);
        LlmClient {
            mode: Mode::Live(Live {
                transport,
                config,
                limiter,
            }),
        }
    }

    pub fn replay(cassette: Cassette) -> Self {
        LlmClient {
            mode: Mode::Replay(cassette),
        }
    }

    pub fn replay_from_path(path: &std::path::Path) -> Result<Self, LlmError> {
        Ok(Self::replay(Cassette::load(path)?))
    }

    /// Live client that also appends each completion to the cassette at
    /// `path`. Existing entries are loaded first and short-circuit repeat
    /// requests, keeping fingerprints unique within the cassette.
    pub fn record(
        transport: Arc<dyn Transport>,
        config: LiveConfig,
        path: &std::path::Path,
    ) -> Result<Self, LlmError> {
        let existing = if path.exists() {
            Cassette::load(path)?
        } else {
            Cassette::empty(path.file_stem().and_then(|s| s.to_str()).unwrap_or("cassette"))
        };
        let mut recorded = HashMap::new();
        for entry in existing.entries() {
            recorded.insert(entry.fingerprint.clone(), entry.completion());
        }
        let writer = CassetteWriter::open_append(path)?;
        let limiter = Limiter::new(config.max_in_flight, config.requests_per_minute);
        Ok(LlmClient {
            mode: Mode::Record {
                live: Live {
                    transport,
                    config,
                    limiter,
                },
                writer: Mutex::new(writer),
                recorded: Mutex::new(recorded),
            },
        })
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.mode, Mode::Replay(_))
    }

    pub fn complete(&self, request: &PromptRequest) -> Result<Completion, LlmError> {
        request.validate()?;
        let fingerprint = request.fingerprint();
        match &self.mode {
            Mode::Replay(cassette) => cassette
                .lookup(&fingerprint)
                .map(|entry| entry.completion())
                .ok_or(LlmError::CassetteMiss(fingerprint)),
            Mode::Live(live) => complete_live(live, request, &fingerprint),
            Mode::Record {
                live,
                writer,
                recorded,
            } => {
                if let Some(hit) = recorded.lock().unwrap().get(&fingerprint) {
                    return Ok(hit.clone());
                }
                let completion = complete_live(live, request, &fingerprint)?;
                let mut recorded = recorded.lock().unwrap();
                // Double-checked: another worker may have recorded the same
                // request while we were in flight.
                if let Some(hit) = recorded.get(&fingerprint) {
                    return Ok(hit.clone());
                }
                writer.lock().unwrap().append_entry(&CassetteEntry {
                    fingerprint: fingerprint.clone(),
                    request_summary: request.summary(),
                    completion_text: completion.text.clone(),
                    finish_reason: completion.finish_reason,
                })?;
                recorded.insert(fingerprint, completion.clone());
                Ok(completion)
            }
        }
    }
}

/// Sampling configuration shared by a family of requests.
#[derive(Debug, Clone)]
pub struct ChatOptions {
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatOptions {
    /// Dataset-generation defaults: high-temperature sampling for diversity.
    pub fn generation(model_id: &str) -> Self {
        ChatOptions {
            model_id: model_id.to_string(),
            temperature: GENERATION_TEMPERATURE,
            max_output_tokens: GENERATION_MAX_TOKENS,
        }
    }

    /// Benchmark-inference defaults: greedy decoding, single-turn budget.
    pub fn inference(model_id: &str) -> Self {
        ChatOptions {
            model_id: model_id.to_string(),
            temperature: EVAL_TEMPERATURE,
            max_output_tokens: INFERENCE_MAX_TOKENS,
        }
    }
}

/// A client, a template store, and sampling options bundled for the
/// pipeline operations that issue prompts.
pub struct LlmContext<'a> {
    pub client: &'a LlmClient,
    pub templates: &'a TemplateStore,
    pub options: ChatOptions,
}

impl LlmContext<'_> {
    pub fn complete_template(
        &self,
        name: &str,
        variables: &std::collections::BTreeMap<String, String>,
    ) -> Result<Completion, LlmError> {
        let (system_text, user_text) = self.templates.render_prompt(name, variables)?;
        self.client.complete(&PromptRequest {
            model_id: self.options.model_id.clone(),
            system_text,
            user_text,
            temperature: self.options.temperature,
            max_output_tokens: self.options.max_output_tokens,
        })
    }
}

fn complete_live(live: &Live, request: &PromptRequest, fingerprint: &str) -> Result<Completion, LlmError> {
    let body = build_chat_body(request);
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        let _slot = live.limiter.acquire();
        match live.transport.post_chat(&live.config.endpoint, &body) {
            Ok(response) => {
                let (text, finish_reason) = parse_chat_response(&response).map_err(|reason| {
                    LlmError::Endpoint {
                        attempts,
                        message: reason,
                    }
                })?;
                return Ok(Completion {
                    text,
                    finish_reason,
                    request_fingerprint: fingerprint.to_string(),
                });
            }
            Err(err) if err.retryable && attempts <= live.config.retry.max_retries => {
                std::thread::sleep(live.config.retry.backoff_delay(attempts));
            }
            Err(err) => {
                return Err(LlmError::Endpoint {
                    attempts,
                    message: err.message,
                })
            }
        }
    }
}
