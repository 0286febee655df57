//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::json;

use super::{BackendError, ChatBackend, Completion, CompletionRequest};

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl LiveBackend {
    /// `endpoint_url` is the API base, e.g. `https://api.openai.com/v1`.
    pub fn new(endpoint_url: &str, api_key: String, timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Rejected(format!("cannot build HTTP client: {e}")))?;
        let base = endpoint_url.trim_end_matches('/');
        let endpoint = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(Self {
            client,
            endpoint,
            api_key,
        })
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            let reason = format!("HTTP {status}: {}", text.chars().take(500).collect::<String>());
            return if status.is_server_error()
                || status == StatusCode::TOO_MANY_REQUESTS
                || status == StatusCode::REQUEST_TIMEOUT
            {
                Err(BackendError::Transport(reason))
            } else {
                Err(BackendError::Rejected(reason))
            };
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| BackendError::Transport(format!("malformed response: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::Transport("response without choices".into()))?;
        Ok(Completion {
            text: choice.message.content.unwrap_or_default(),
            truncated: choice.finish_reason.as_deref() == Some("length"),
        })
    }
}
