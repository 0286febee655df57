//! Backend answering from a closure. Used by tests and to produce demo
//! transcripts.

use super::{BackendError, ChatBackend, Completion, CompletionRequest};

type Script = dyn Fn(&CompletionRequest<'_>) -> Result<Completion, BackendError> + Send + Sync;

pub struct ScriptedBackend {
    script: Box<Script>,
}

impl ScriptedBackend {
    pub fn new(
        script: impl Fn(&CompletionRequest<'_>) -> Result<Completion, BackendError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            script: Box::new(script),
        }
    }

    /// Infallible script: every request gets the returned text.
    pub fn replies(
        script: impl Fn(&CompletionRequest<'_>) -> String + Send + Sync + 'static,
    ) -> Self {
        Self::new(move |req| Ok(Completion::stop(script(req))))
    }

    pub fn constant(text: &str) -> Self {
        let text = text.to_string();
        Self::new(move |_| Ok(Completion::stop(text.clone())))
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        (self.script)(request)
    }
}
