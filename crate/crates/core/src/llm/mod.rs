//! Chat sessions against an LLM backend, with request accounting.
//!
//! A request is one successful chat completion. Transport failures are
//! retried and recorded but never counted.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod live;
pub mod replay;
pub mod scripted;
pub mod transcript;

pub use live::LiveBackend;
pub use replay::ReplayBackend;
pub use scripted::ScriptedBackend;
pub use transcript::{TranscriptRecord, TranscriptRecorder};

pub const DEFAULT_TEMPERATURE: f64 = 0.1;
pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub session_id: &'a str,
    pub seq: u32,
    pub messages: &'a [Message],
    pub model: &'a str,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// The backend stopped because of its token limit.
    pub truncated: bool,
}

impl Completion {
    pub fn stop(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            truncated: false,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    /// Retryable: timeouts, connection resets, 5xx, rate limiting.
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("replay desync: {0}")]
    Desync(String),
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError>;
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend unavailable for session {session} after {attempts} attempts: {last}")]
    BackendUnavailable {
        session: String,
        attempts: u32,
        last: String,
    },
    #[error("request rejected in session {session}: {reason}")]
    Rejected { session: String, reason: String },
    #[error("replay desync in session {session}: {reason}")]
    Desync { session: String, reason: String },
    #[error("reply truncated by the backend token limit in session {0}")]
    Truncated(String),
    #[error("temperature {0} outside [0, 2]")]
    InvalidTemperature(f64),
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    /// Base delay for exponential backoff between retries.
    pub backoff_base: Duration,
    pub system_message: Option<String>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            model: "gpt-4o-mini".to_string(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: DEFAULT_MAX_RETRIES,
            backoff_base: Duration::from_millis(500),
            system_message: None,
        }
    }
}

/// An ordered conversation confined to one unit of work.
#[derive(Debug, Clone)]
pub struct ChatSession {
    pub id: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub counted_requests: u32,
    pub transport_failures: u32,
    next_seq: u32,
}

impl ChatSession {
    pub fn new(id: impl Into<String>, temperature: f64) -> Result<Self, LlmError> {
        if !(0.0..=2.0).contains(&temperature) {
            return Err(LlmError::InvalidTemperature(temperature));
        }
        Ok(Self {
            id: id.into(),
            messages: Vec::new(),
            temperature,
            counted_requests: 0,
            transport_failures: 0,
            next_seq: 0,
        })
    }

    /// Number of non-system messages.
    pub fn turn_messages(&self) -> usize {
        self.messages.iter().filter(|m| m.role != Role::System).count()
    }
}

pub struct LlmGateway {
    backend: Box<dyn ChatBackend>,
    config: GatewayConfig,
    recorder: Option<TranscriptRecorder>,
    total_requests: AtomicU64,
    total_failures: AtomicU64,
}

impl LlmGateway {
    pub fn new(backend: Box<dyn ChatBackend>, config: GatewayConfig) -> Result<Self, LlmError> {
        if !(0.0..=2.0).contains(&config.temperature) {
            return Err(LlmError::InvalidTemperature(config.temperature));
        }
        Ok(Self {
            backend,
            config,
            recorder: None,
            total_requests: AtomicU64::new(0),
            total_failures: AtomicU64::new(0),
        })
    }

    pub fn with_recorder(mut self, recorder: TranscriptRecorder) -> Self {
        self.recorder = Some(recorder);
        self
    }

    pub fn recorder(&self) -> Option<&TranscriptRecorder> {
        self.recorder.as_ref()
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn total_requests(&self) -> u64 {
        self.total_requests.load(Ordering::SeqCst)
    }

    pub fn total_transport_failures(&self) -> u64 {
        self.total_failures.load(Ordering::SeqCst)
    }

    pub fn open_session(&self, id: impl Into<String>) -> ChatSession {
        let mut session =
            ChatSession::new(id, self.config.temperature).expect("temperature validated in new");
        if let Some(system) = &self.config.system_message {
            session.messages.push(Message::new(Role::System, system.clone()));
        }
        session
    }

    /// Appends `user_text`, obtains a reply and appends it. On failure the
    /// user message is withdrawn so the history stays alternating.
    pub fn send(&self, session: &mut ChatSession, user_text: &str) -> Result<String, LlmError> {
        session.messages.push(Message::new(Role::User, user_text));
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            let seq = session.next_seq;
            session.next_seq += 1;
            let request = CompletionRequest {
                session_id: &session.id,
                seq,
                messages: &session.messages,
                model: &self.config.model,
                temperature: session.temperature,
            };
            match self.backend.complete(&request) {
                Ok(completion) => {
                    self.record(&request, &completion.text, true, completion.truncated);
                    session.counted_requests += 1;
                    self.total_requests.fetch_add(1, Ordering::SeqCst);
                    if completion.truncated {
                        session.messages.pop();
                        return Err(LlmError::Truncated(session.id.clone()));
                    }
                    session
                        .messages
                        .push(Message::new(Role::Assistant, completion.text.clone()));
                    return Ok(completion.text);
                }
                Err(BackendError::Transport(reason)) => {
                    self.record_failure(&request, &reason);
                    session.transport_failures += 1;
                    self.total_failures.fetch_add(1, Ordering::SeqCst);
                    tracing::warn!(session = %session.id, attempt, %reason, "transport failure");
                    last = reason;
                    if attempt < self.config.max_retries && !self.config.backoff_base.is_zero() {
                        std::thread::sleep(self.config.backoff_base * 2u32.pow(attempt));
                    }
                }
                Err(BackendError::Rejected(reason)) => {
                    session.messages.pop();
                    return Err(LlmError::Rejected {
                        session: session.id.clone(),
                        reason,
                    });
                }
                Err(BackendError::Desync(reason)) => {
                    session.messages.pop();
                    return Err(LlmError::Desync {
                        session: session.id.clone(),
                        reason,
                    });
                }
            }
        }
        session.messages.pop();
        Err(LlmError::BackendUnavailable {
            session: session.id.clone(),
            attempts: self.config.max_retries + 1,
            last,
        })
    }

    fn record(&self, request: &CompletionRequest<'_>, text: &str, counted: bool, truncated: bool) {
        if let Some(recorder) = &self.recorder {
            recorder.append(TranscriptRecord {
                session_id: request.session_id.to_string(),
                seq: request.seq,
                request_messages: request.messages.to_vec(),
                response_text: text.to_string(),
                model: request.model.to_string(),
                counted,
                finish_reason: Some(if truncated { "length" } else { "stop" }.to_string()),
            });
        }
    }

    fn record_failure(&self, request: &CompletionRequest<'_>, reason: &str) {
        if let Some(recorder) = &self.recorder {
            recorder.append(TranscriptRecord {
                session_id: request.session_id.to_string(),
                seq: request.seq,
                request_messages: request.messages.to_vec(),
                response_text: reason.to_string(),
                model: request.model.to_string(),
                counted: false,
                finish_reason: Some(transcript::TRANSPORT_ERROR.to_string()),
            });
        }
    }
}

/// Fenced code blocks of a reply in order, or the whole reply when it has
/// no fences.
pub fn extract_code_blocks(reply: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in reply.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(lines), true) => {
                blocks.push(lines.join("\n"));
                current = None;
            }
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    if let Some(lines) = current {
        blocks.push(lines.join("\n"));
    }
    if blocks.is_empty() {
        let whole = reply.trim();
        if whole.is_empty() {
            return Vec::new();
        }
        return vec![whole.to_string()];
    }
    blocks
}
