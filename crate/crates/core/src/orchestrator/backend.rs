use std::collections::VecDeque;
use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireRole {
    System,
    User,
    Assistant,
}

/// One message of a chat-completions request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: WireRole,
    pub content: String,
}

impl WireMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: WireRole::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: WireRole::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: WireRole::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { temperature: 0.0, top_p: None, max_tokens: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("replay script exhausted after {served} replies")]
    ReplayExhausted { served: usize },
    #[error("replay script expected a {expected} reply but the pipeline is in {actual}")]
    PhaseMismatch { expected: Phase, actual: Phase },
    #[error("a completion needs at least one message")]
    EmptyMessages,
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A chat model that answers a conversation.
pub trait ChatBackend {
    fn complete(&mut self, messages: &[WireMessage], params: &SamplingParams) -> Result<String, BackendError>;

    /// Called when the pipeline enters a phase.
    fn set_phase(&mut self, _phase: Phase) {}
}

impl<B: ChatBackend + ?Sized> ChatBackend for &mut B {
    fn complete(&mut self, messages: &[WireMessage], params: &SamplingParams) -> Result<String, BackendError> {
        (**self).complete(messages, params)
    }

    fn set_phase(&mut self, phase: Phase) {
        (**self).set_phase(phase)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&mut self, messages: &[WireMessage], params: &SamplingParams) -> Result<String, BackendError> {
        (**self).complete(messages, params)
    }

    fn set_phase(&mut self, phase: Phase) {
        (**self).set_phase(phase)
    }
}

/// One scripted assistant reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    pub content: String,
}

impl ReplayEntry {
    pub fn new(phase: Phase, content: impl Into<String>) -> Self {
        Self { phase: Some(phase), content: content.into() }
    }
}

/// Serves scripted replies in order. Entries tagged with a phase must be
/// consumed in that phase. Entering a phase discards entries left over from
/// earlier phases, so one script also drives runs with phases disabled.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    script: VecDeque<ReplayEntry>,
    served: usize,
    skipped: usize,
    phase: Option<Phase>,
    /// Every request received, for inspection in tests.
    pub requests: Vec<Vec<WireMessage>>,
}

impl ReplayBackend {
    pub fn new(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        Self { script: entries.into_iter().collect(), ..Self::default() }
    }

    /// Parses a JSON-Lines script; blank lines are skipped.
    pub fn from_jsonl(text: &str) -> Result<Self, BackendError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ReplayEntry = serde_json::from_str(line)
                .map_err(|e| BackendError::Config(format!("replay line {}: {e}", i + 1)))?;
            entries.push(e);
        }
        Ok(Self::new(entries))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }

    pub fn served(&self) -> usize {
        self.served
    }

    /// Entries discarded because their phase had already passed.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&mut self, messages: &[WireMessage], _params: &SamplingParams) -> Result<String, BackendError> {
        if messages.is_empty() {
            return Err(BackendError::EmptyMessages);
        }
        let next = self
            .script
            .front()
            .ok_or(BackendError::ReplayExhausted { served: self.served })?;
        if let (Some(expected), Some(actual)) = (next.phase, self.phase) {
            if expected != actual {
                return Err(BackendError::PhaseMismatch { expected, actual });
            }
        }
        let entry = self.script.pop_front().unwrap();
        self.requests.push(messages.to_vec());
        self.served += 1;
        Ok(entry.content)
    }

    fn set_phase(&mut self, phase: Phase) {
        self.phase = Some(phase);
        while self.script.front().is_some_and(|e| e.phase.is_some_and(|p| p < phase)) {
            self.script.pop_front();
            self.skipped += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `n` (1-based).
    pub fn backoff(&self, n: u32) -> Duration {
        let factor = 1u32 << (n.saturating_sub(1)).min(16);
        (self.initial_backoff * factor).min(self.max_backoff)
    }
}

pub const ENV_API_BASE: &str = "MAO_API_BASE";
pub const ENV_API_KEY: &str = "MAO_API_KEY";
pub const ENV_MODEL: &str = "MAO_MODEL";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    /// Base URL; requests go to `{base}/chat/completions`.
    pub api_base: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            api_base: DEFAULT_API_BASE.into(),
            api_key: None,
            model: DEFAULT_MODEL.into(),
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }
}

impl HttpConfig {
    /// Defaults overridden by `MAO_API_BASE`, `MAO_API_KEY` and `MAO_MODEL`.
    pub fn from_env() -> Self {
        let mut c = Self::default();
        if let Ok(v) = std::env::var(ENV_API_BASE) {
            c.api_base = v;
        }
        if let Ok(v) = std::env::var(ENV_API_KEY) {
            c.api_key = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_MODEL) {
            c.model = v;
        }
        c
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: &'a [WireMessage],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

/// Chat-completions client over HTTP(S). Cloning shares the connection
/// pool, so one backend can serve several sessions on different threads.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(BackendError),
    Fail(BackendError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Self { config, agent }
    }

    pub fn from_env() -> Self {
        Self::new(HttpConfig::from_env())
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.api_base.trim_end_matches('/'))
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, Attempt> {
        let mut req = self.agent.post(&self.endpoint());
        if let Some(key) = &self.config.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(body) {
            Ok(resp) => {
                let v: serde_json::Value = resp
                    .into_json()
                    .map_err(|e| Attempt::Fail(BackendError::Malformed(e.to_string())))?;
                v.pointer("/choices/0/message/content")
                    .and_then(|c| c.as_str())
                    .map(str::to_owned)
                    .ok_or_else(|| Attempt::Fail(BackendError::Malformed("missing choices[0].message.content".into())))
            }
            Err(ureq::Error::Status(429, _)) => Err(Attempt::Retry(BackendError::RateLimited {
                attempts: self.config.retry.attempts,
            })),
            Err(ureq::Error::Status(code, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                let err = BackendError::Transport(format!("HTTP {code}: {}", body.trim()));
                if code >= 500 {
                    Err(Attempt::Retry(err))
                } else {
                    Err(Attempt::Fail(err))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Attempt::Retry(BackendError::Transport(t.to_string()))),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&mut self, messages: &[WireMessage], params: &SamplingParams) -> Result<String, BackendError> {
        if messages.is_empty() {
            return Err(BackendError::EmptyMessages);
        }
        let body = serde_json::to_value(CompletionRequest {
            model: &self.config.model,
            messages,
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_tokens,
        })
        .map_err(|e| BackendError::Malformed(e.to_string()))?;
        let attempts = self.config.retry.attempts.max(1);
        let mut last = BackendError::Transport("no attempt made".into());
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    last = e;
                    if n < attempts {
                        thread::sleep(self.config.retry.backoff(n));
                    }
                }
            }
        }
        Err(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_serves_in_order_then_exhausts() {
        let mut b = ReplayBackend::from_jsonl(
            "{\"phase\":\"generation\",\"content\":\"one\"}\n\n{\"phase\":\"generation\",\"content\":\"two\"}\n",
        )
        .unwrap();
        let msgs = [WireMessage::user("hi")];
        let p = SamplingParams::default();
        assert_eq!(b.complete(&msgs, &p).unwrap(), "one");
        assert_eq!(b.complete(&msgs, &p).unwrap(), "two");
        assert_eq!(b.complete(&msgs, &p), Err(BackendError::ReplayExhausted { served: 2 }));
    }

    #[test]
    fn replay_rejects_empty_requests_and_wrong_phase() {
        let mut b = ReplayBackend::new([ReplayEntry::new(Phase::Testing, "x")]);
        let p = SamplingParams::default();
        assert_eq!(b.complete(&[], &p), Err(BackendError::EmptyMessages));
        b.set_phase(Phase::Generation);
        assert!(matches!(
            b.complete(&[WireMessage::user("a")], &p),
            Err(BackendError::PhaseMismatch { .. })
        ));
    }

    #[test]
    fn replay_skips_entries_of_passed_phases() {
        let mut b = ReplayBackend::new([
            ReplayEntry::new(Phase::Generation, "g"),
            ReplayEntry::new(Phase::Refinement, "r"),
            ReplayEntry::new(Phase::Reviewing, "v"),
        ]);
        let p = SamplingParams::default();
        let msgs = [WireMessage::user("a")];
        b.set_phase(Phase::Generation);
        assert_eq!(b.complete(&msgs, &p).unwrap(), "g");
        b.set_phase(Phase::Reviewing);
        assert_eq!(b.skipped(), 1);
        assert_eq!(b.complete(&msgs, &p).unwrap(), "v");
    }

    #[test]
    fn backoff_doubles_up_to_cap() {
        let r = RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(100),
            max_backoff: Duration::from_millis(300),
        };
        assert_eq!(r.backoff(1), Duration::from_millis(100));
        assert_eq!(r.backoff(2), Duration::from_millis(200));
        assert_eq!(r.backoff(3), Duration::from_millis(300));
    }
}
