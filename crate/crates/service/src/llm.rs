//! Optional summarizer backed by an OpenAI-style chat-completions endpoint.
//!
//! Disabled unless `MNEMEX_LLM_URL` is set. The prompt template is plain
//! text with an `{entries}` placeholder, replaced by one line per entry.

use std::path::Path;
use std::time::Duration;

use mnemex_core::{Error, MemoryEntry, Result, Summarizer};
use serde_json::{json, Value};

pub const DEFAULT_PROMPT: &str = "Summarize the following agent memory entries as one concise, factual statement. \
Use only information stated in the entries.\n\n{entries}";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

pub struct LlmSummarizer {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    prompt_template: String,
}

impl std::fmt::Debug for LlmSummarizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmSummarizer")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl LlmSummarizer {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            prompt_template: DEFAULT_PROMPT.to_string(),
        }
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn with_prompt_template(mut self, template: impl Into<String>) -> Self {
        self.prompt_template = template.into();
        self
    }

    pub fn with_prompt_file(self, path: &Path) -> std::io::Result<Self> {
        let template = std::fs::read_to_string(path)?;
        Ok(self.with_prompt_template(template))
    }

    /// Built from `MNEMEX_LLM_URL`, `MNEMEX_LLM_MODEL`, `MNEMEX_LLM_API_KEY`,
    /// `MNEMEX_LLM_PROMPT_FILE` and `MNEMEX_LLM_TIMEOUT_SECS`; `None` when no
    /// URL is configured.
    pub fn from_env() -> Option<std::io::Result<Self>> {
        let url = std::env::var("MNEMEX_LLM_URL").ok().filter(|u| !u.is_empty())?;
        let model = std::env::var("MNEMEX_LLM_MODEL").unwrap_or_else(|_| "default".into());
        let timeout = std::env::var("MNEMEX_LLM_TIMEOUT_SECS")
            .ok()
            .and_then(|s| s.parse().ok())
            .map_or(DEFAULT_TIMEOUT, Duration::from_secs);
        let mut s = Self::new(url, model, timeout);
        if let Ok(key) = std::env::var("MNEMEX_LLM_API_KEY") {
            s = s.with_api_key(key);
        }
        Some(match std::env::var("MNEMEX_LLM_PROMPT_FILE") {
            Ok(path) => s.with_prompt_file(Path::new(&path)),
            Err(_) => Ok(s),
        })
    }

    pub fn render_prompt(&self, entries: &[MemoryEntry]) -> String {
        let lines: Vec<String> = entries
            .iter()
            .map(|e| format!("- [turn {}, {}] {}", e.turn, e.kind.as_str(), e.content))
            .collect();
        self.prompt_template.replace("{entries}", &lines.join("\n"))
    }

    pub fn request_body(&self, entries: &[MemoryEntry]) -> Value {
        json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": self.render_prompt(entries) }],
        })
    }
}

impl Summarizer for LlmSummarizer {
    fn summarize(&self, entries: &[MemoryEntry]) -> Result<String> {
        if entries.is_empty() {
            return Err(Error::EmptySummaryInput);
        }
        let fail = |msg: String| Error::Summarizer(msg);
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(self.request_body(entries))
            .map_err(|e| fail(format!("request to {} failed: {e}", self.endpoint)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(fail(format!("endpoint returned HTTP {}", status.as_u16())));
        }
        let body: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| fail(format!("unreadable response: {e}")))?;
        let text = body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| fail("response has no choices[0].message.content".into()))?;
        Ok(text.to_string())
    }
}
