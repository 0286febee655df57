//! Deterministic backend answering from a recorded transcript.
//!
//! Records are addressed by (session id, sequence number), so replay works
//! regardless of the order in which concurrent sessions ask.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use super::transcript::TranscriptRecord;
use super::{BackendError, ChatBackend, Completion, CompletionRequest};

pub struct ReplayBackend {
    records: BTreeMap<(String, u32), TranscriptRecord>,
    consumed: Mutex<BTreeSet<(String, u32)>>,
}

impl ReplayBackend {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        Self {
            records: records
                .into_iter()
                .map(|r| ((r.session_id.clone(), r.seq), r))
                .collect(),
            consumed: Mutex::new(BTreeSet::new()),
        }
    }

    /// Records never asked for, as (session, seq) keys.
    pub fn unconsumed(&self) -> Vec<(String, u32)> {
        let consumed = self.consumed.lock().expect("replay lock");
        self.records
            .keys()
            .filter(|k| !consumed.contains(*k))
            .cloned()
            .collect()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let key = (request.session_id.to_string(), request.seq);
        let Some(record) = self.records.get(&key) else {
            return Err(BackendError::Desync(format!(
                "no recorded exchange #{} for session {}",
                request.seq, request.session_id
            )));
        };
        if record.model != request.model {
            return Err(BackendError::Desync(format!(
                "model mismatch: recorded `{}`, requested `{}`",
                record.model, request.model
            )));
        }
        if record.request_messages != request.messages {
            let at = record
                .request_messages
                .iter()
                .zip(request.messages)
                .position(|(a, b)| a != b)
                .unwrap_or(record.request_messages.len().min(request.messages.len()));
            return Err(BackendError::Desync(format!(
                "request #{} of session {} differs from the recording at message {at}",
                request.seq, request.session_id
            )));
        }
        self.consumed.lock().expect("replay lock").insert(key);
        if record.is_transport_failure() {
            return Err(BackendError::Transport(record.response_text.clone()));
        }
        Ok(Completion {
            text: record.response_text.clone(),
            truncated: record.finish_reason.as_deref() == Some("length"),
        })
    }
}
